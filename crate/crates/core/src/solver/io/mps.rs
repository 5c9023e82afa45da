use std::collections::HashMap;
use std::fmt::Write as _;

use super::{parse_error, parse_number, IoError};
use crate::model::{MilpModel, Sense};

const OBJECTIVE_ROW: &str = "obj";

/// Writes free-format MPS. Binaries with `[0, 1]` bounds are declared with
/// `BV`; other binaries sit between integer markers with explicit bounds.
pub fn write_mps(model: &MilpModel) -> String {
    let mut out = String::new();
    let name = if model.name.is_empty() { "model" } else { &model.name };
    let _ = writeln!(out, "NAME {name}");
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N {OBJECTIVE_ROW}");
    for row in &model.rows {
        let code = match row.sense {
            Sense::Le => 'L',
            Sense::Ge => 'G',
            Sense::Eq => 'E',
        };
        let _ = writeln!(out, " {code} {}", row.name);
    }

    let mut entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.columns.len()];
    for (i, row) in model.rows.iter().enumerate() {
        for &(j, a) in &row.terms {
            entries[j].push((i, a));
        }
    }
    out.push_str("COLUMNS\n");
    let mut in_marker = false;
    let mut marker_count = 0;
    for (j, c) in model.columns.iter().enumerate() {
        let wants_marker = c.binary && !(c.lower == 0.0 && c.upper == 1.0);
        if wants_marker != in_marker {
            let kind = if wants_marker { "INTORG" } else { "INTEND" };
            let _ = writeln!(out, "    MARKER{marker_count} 'MARKER' '{kind}'");
            marker_count += usize::from(!wants_marker);
            in_marker = wants_marker;
        }
        let _ = writeln!(out, "    {} {OBJECTIVE_ROW} {}", c.name, c.cost);
        for &(i, a) in &entries[j] {
            let _ = writeln!(out, "    {} {} {}", c.name, model.rows[i].name, a);
        }
    }
    if in_marker {
        let _ = writeln!(out, "    MARKER{marker_count} 'MARKER' 'INTEND'");
    }

    out.push_str("RHS\n");
    for row in model.rows.iter().filter(|r| r.rhs != 0.0) {
        let _ = writeln!(out, "    RHS {} {}", row.name, row.rhs);
    }

    out.push_str("BOUNDS\n");
    for c in &model.columns {
        let n = &c.name;
        if c.binary && c.lower == 0.0 && c.upper == 1.0 {
            let _ = writeln!(out, " BV BND {n}");
        } else if c.lower == c.upper {
            let _ = writeln!(out, " FX BND {n} {}", c.lower);
        } else if c.lower == f64::NEG_INFINITY && c.upper == f64::INFINITY {
            let _ = writeln!(out, " FR BND {n}");
        } else {
            if c.lower == f64::NEG_INFINITY {
                let _ = writeln!(out, " MI BND {n}");
            } else if c.lower != 0.0 || c.binary {
                let _ = writeln!(out, " LO BND {n} {}", c.lower);
            }
            if c.upper != f64::INFINITY {
                let _ = writeln!(out, " UP BND {n} {}", c.upper);
            } else if c.binary {
                let _ = writeln!(out, " PL BND {n}");
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Start,
    Rows,
    Columns,
    Rhs,
    Bounds,
    Done,
}

/// Parses the free-MPS subset written by [`write_mps`]. Columns inside
/// integer markers are read as binaries, `[0, 1]` unless bounded explicitly.
pub fn parse_mps(text: &str) -> Result<MilpModel, IoError> {
    let mut model = MilpModel::new("");
    let mut section = Section::Start;
    let mut objective: Option<String> = None;
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut explicit = Vec::new();
    let mut in_marker = false;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let words: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with([' ', '\t']) {
            section = match words[0] {
                "NAME" => {
                    model.name = words.get(1).map(|s| s.to_string()).unwrap_or_default();
                    Section::Start
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::Done,
                "OBJSENSE" => return Err(parse_error(line, "OBJSENSE is not supported")),
                other => return Err(parse_error(line, format!("unsupported section {other:?}"))),
            };
            continue;
        }
        match section {
            Section::Start | Section::Done => return Err(parse_error(line, "data outside a section")),
            Section::Rows => {
                let [code, name] = words[..] else {
                    return Err(parse_error(line, "expected `type name`"));
                };
                let sense = match code {
                    "N" => {
                        if objective.is_some() {
                            return Err(parse_error(line, "more than one objective row"));
                        }
                        objective = Some(name.to_owned());
                        continue;
                    }
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    other => return Err(parse_error(line, format!("unknown row type {other:?}"))),
                };
                if row_index.insert(name.to_owned(), model.rows.len()).is_some() {
                    return Err(parse_error(line, format!("row {name} declared twice")));
                }
                model.add_row(name, Vec::new(), sense, 0.0);
            }
            Section::Columns => {
                if words.get(1) == Some(&"'MARKER'") {
                    match words.get(2) {
                        Some(&"'INTORG'") => in_marker = true,
                        Some(&"'INTEND'") => in_marker = false,
                        _ => return Err(parse_error(line, "unknown marker")),
                    }
                    continue;
                }
                if words.len() != 3 && words.len() != 5 {
                    return Err(parse_error(line, "expected `column row value [row value]`"));
                }
                let name = words[0];
                let j = match col_index.get(name) {
                    Some(&j) => j,
                    None => {
                        let (lo, up) = if in_marker { (0.0, 1.0) } else { (0.0, f64::INFINITY) };
                        let j = model.add_column(name, lo, up, 0.0, in_marker);
                        col_index.insert(name.to_owned(), j);
                        explicit.push(false);
                        j
                    }
                };
                for pair in words[1..].chunks(2) {
                    let value = parse_number(line, pair[1])?;
                    if objective.as_deref() == Some(pair[0]) {
                        model.columns[j].cost = value;
                    } else {
                        let &r = row_index
                            .get(pair[0])
                            .ok_or_else(|| parse_error(line, format!("unknown row {:?}", pair[0])))?;
                        model.rows[r].terms.push((j, value));
                    }
                }
            }
            Section::Rhs => {
                if words.len() != 3 && words.len() != 5 {
                    return Err(parse_error(line, "expected `set row value [row value]`"));
                }
                for pair in words[1..].chunks(2) {
                    let value = parse_number(line, pair[1])?;
                    if objective.as_deref() == Some(pair[0]) {
                        continue;
                    }
                    let &r = row_index
                        .get(pair[0])
                        .ok_or_else(|| parse_error(line, format!("unknown row {:?}", pair[0])))?;
                    model.rows[r].rhs = value;
                }
            }
            Section::Bounds => {
                if words.len() < 3 {
                    return Err(parse_error(line, "expected `type set column [value]`"));
                }
                let (code, name) = (words[0], words[2]);
                let &j = col_index.get(name).ok_or_else(|| IoError::UnknownColumn {
                    line,
                    name: name.to_owned(),
                })?;
                let value = || {
                    words
                        .get(3)
                        .ok_or_else(|| parse_error(line, format!("{code} bound needs a value")))
                        .and_then(|t| parse_number(line, t))
                };
                if !explicit[j] && model.columns[j].binary {
                    // explicit bounds on a marker column replace the implied [0, 1]
                    model.columns[j].upper = f64::INFINITY;
                }
                explicit[j] = true;
                let c = &mut model.columns[j];
                match code {
                    "UP" => c.upper = value()?,
                    "LO" => c.lower = value()?,
                    "FX" => {
                        let v = value()?;
                        c.lower = v;
                        c.upper = v;
                    }
                    "MI" => c.lower = f64::NEG_INFINITY,
                    "PL" => c.upper = f64::INFINITY,
                    "FR" => {
                        c.lower = f64::NEG_INFINITY;
                        c.upper = f64::INFINITY;
                    }
                    "BV" => {
                        c.binary = true;
                        c.lower = 0.0;
                        c.upper = 1.0;
                    }
                    other => return Err(parse_error(line, format!("unsupported bound type {other:?}"))),
                }
            }
        }
    }
    if section != Section::Done {
        return Err(parse_error(text.lines().count(), "missing ENDATA"));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::io::same_model_up_to_row_order;

    #[test]
    fn round_trip_with_marker_binaries() {
        let mut m = MilpModel::new("m");
        let x = m.add_column("x", -1.0, f64::INFINITY, 1.0, false);
        let g = m.add_column("g", 0.0, 1.0, 2.0, true);
        let h = m.add_column("h", 1.0, 1.0, 0.0, true);
        let f = m.add_column("f", f64::NEG_INFINITY, 3.0, 0.0, false);
        m.add_row("a", vec![(x, 1.0), (g, 4.0)], Sense::Ge, 2.0);
        m.add_row("b", vec![(h, 1.0), (f, -1.0)], Sense::Eq, 0.0);
        m.add_row("c", vec![(x, 0.5)], Sense::Le, -3.25);
        let text = write_mps(&m);
        assert!(text.contains(" BV BND g"));
        assert!(text.contains("'INTORG'"));
        let back = parse_mps(&text).unwrap();
        assert!(same_model_up_to_row_order(&m, &back), "{text}");
    }

    #[test]
    fn rejects_unknown_rows_and_sections() {
        let text = "NAME t\nROWS\n N obj\nCOLUMNS\n    x nope 1\nENDATA\n";
        assert!(parse_mps(text).is_err());
        assert!(parse_mps("NAME t\nRANGES\nENDATA\n").is_err());
        assert!(parse_mps("NAME t\nROWS\n N obj\n").is_err());
    }
}
