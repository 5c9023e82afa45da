use std::collections::HashMap;
use std::fmt::Write as _;

use super::{parse_error, parse_number, IoError};
use crate::model::{MilpModel, Sense};

const TERMS_PER_LINE: usize = 8;

fn bound_text(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        v.to_string()
    }
}

fn push_terms(out: &mut String, terms: impl Iterator<Item = (f64, String)>) {
    for (k, (a, name)) in terms.enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if a.is_sign_negative() { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {name}", a.abs());
    }
}

/// Writes the model in CPLEX LP format. Every column appears in the
/// objective, so the column order survives a round trip.
pub fn write_lp(model: &MilpModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ Problem name: {}", model.name);
    out.push_str("Minimize\n obj:");
    push_terms(&mut out, model.columns.iter().map(|c| (c.cost, c.name.clone())));
    out.push_str("\nSubject To\n");
    for row in &model.rows {
        let _ = write!(out, " {}:", row.name);
        if row.terms.is_empty() {
            // keep the row syntactically valid
            if let Some(c) = model.columns.first() {
                let _ = write!(out, " + 0 {}", c.name);
            }
        }
        push_terms(&mut out, row.terms.iter().map(|&(j, a)| (a, model.columns[j].name.clone())));
        let _ = writeln!(out, " {} {}", row.sense, row.rhs);
    }
    out.push_str("Bounds\n");
    for c in &model.columns {
        if c.binary && c.lower == 0.0 && c.upper == 1.0 {
            continue;
        }
        if c.lower == f64::NEG_INFINITY && c.upper == f64::INFINITY {
            let _ = writeln!(out, " {} free", c.name);
        } else if c.lower == c.upper {
            let _ = writeln!(out, " {} = {}", c.name, c.lower);
        } else {
            let _ = writeln!(out, " {} <= {} <= {}", bound_text(c.lower), c.name, bound_text(c.upper));
        }
    }
    if model.columns.iter().any(|c| c.binary) {
        out.push_str("Binaries\n");
        for c in model.columns.iter().filter(|c| c.binary) {
            let _ = writeln!(out, " {}", c.name);
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    Done,
}

fn section_header(line: &str) -> Option<Section> {
    let lower = line.trim().to_ascii_lowercase();
    let words: Vec<&str> = lower.split_whitespace().collect();
    match words.as_slice() {
        ["minimize"] | ["minimise"] | ["min"] => Some(Section::Objective),
        ["subject", "to"] | ["such", "that"] | ["st"] | ["s.t."] => Some(Section::Constraints),
        ["bounds"] | ["bound"] => Some(Section::Bounds),
        ["binaries"] | ["binary"] | ["bin"] => Some(Section::Binaries),
        ["end"] => Some(Section::Done),
        _ => None,
    }
}

fn parse_sense(token: &str) -> Option<Sense> {
    match token {
        "<=" | "=<" | "<" => Some(Sense::Le),
        ">=" | "=>" | ">" => Some(Sense::Ge),
        "=" => Some(Sense::Eq),
        _ => None,
    }
}

struct Builder {
    model: MilpModel,
    index: HashMap<String, usize>,
    explicit_bounds: Vec<bool>,
}

impl Builder {
    fn column(&mut self, name: &str) -> usize {
        if let Some(&j) = self.index.get(name) {
            return j;
        }
        let j = self.model.add_column(name, 0.0, f64::INFINITY, 0.0, false);
        self.index.insert(name.to_owned(), j);
        self.explicit_bounds.push(false);
        j
    }
}

/// Tokens with their line numbers, from a run of lines in one section.
type Tokens = Vec<(usize, String)>;

/// Parses `[sign] [coef] name` terms until `stop` says the token ends them.
fn parse_terms(
    b: &mut Builder,
    tokens: &[(usize, String)],
    pos: &mut usize,
    stop: impl Fn(&str) -> bool,
) -> Result<Vec<(usize, f64)>, IoError> {
    let mut terms = Vec::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    while *pos < tokens.len() && !stop(&tokens[*pos].1) {
        let (line, tok) = &tokens[*pos];
        *pos += 1;
        match tok.as_str() {
            "+" => {}
            "-" => sign = -sign,
            t => {
                if let Ok(v) = t.parse::<f64>() {
                    if coef.is_some() {
                        return Err(parse_error(*line, "two coefficients in a row"));
                    }
                    coef = Some(v);
                } else {
                    let j = b.column(t);
                    terms.push((j, sign * coef.take().unwrap_or(1.0)));
                    sign = 1.0;
                }
            }
        }
    }
    if coef.is_some() {
        let line = tokens.get(pos.saturating_sub(1)).map_or(0, |t| t.0);
        return Err(parse_error(line, "coefficient without a column"));
    }
    Ok(terms)
}

fn parse_objective(b: &mut Builder, tokens: &Tokens) -> Result<(), IoError> {
    let mut pos = 0;
    if tokens.first().is_some_and(|(_, t)| t.ends_with(':')) {
        pos = 1;
    }
    for (j, a) in parse_terms(b, tokens, &mut pos, |_| false)? {
        b.model.columns[j].cost += a;
    }
    Ok(())
}

fn parse_constraints(b: &mut Builder, tokens: &Tokens) -> Result<(), IoError> {
    let mut pos = 0;
    while pos < tokens.len() {
        let (line, head) = &tokens[pos];
        let name = match head.strip_suffix(':') {
            Some(n) => {
                pos += 1;
                n.to_owned()
            }
            None => format!("R{}", b.model.rows.len() + 1),
        };
        let terms = parse_terms(b, tokens, &mut pos, |t| parse_sense(t).is_some())?;
        let Some((_, sense_tok)) = tokens.get(pos) else {
            return Err(parse_error(*line, format!("row {name} has no sense")));
        };
        let sense = parse_sense(sense_tok).expect("stopped on a sense token");
        pos += 1;
        let mut rhs_tok = tokens
            .get(pos)
            .ok_or_else(|| parse_error(*line, format!("row {name} has no right-hand side")))?
            .clone();
        pos += 1;
        if rhs_tok.1 == "-" || rhs_tok.1 == "+" {
            let next = tokens
                .get(pos)
                .ok_or_else(|| parse_error(*line, format!("row {name} has no right-hand side")))?;
            rhs_tok = (next.0, format!("{}{}", rhs_tok.1, next.1));
            pos += 1;
        }
        let rhs = parse_number(rhs_tok.0, &rhs_tok.1)?;
        b.model.add_row(name, terms, sense, rhs);
    }
    Ok(())
}

fn parse_bound_line(b: &mut Builder, line: usize, text: &str) -> Result<(), IoError> {
    let words: Vec<&str> = text.split_whitespace().collect();
    let num = |t: &str| parse_number(line, t);
    let is_num = |t: &str| num(t).is_ok();
    let (name, lower, upper) = match words.as_slice() {
        [n, free] if free.eq_ignore_ascii_case("free") => (*n, Some(f64::NEG_INFINITY), Some(f64::INFINITY)),
        [lo, "<=", n, "<=", up] => (*n, Some(num(lo)?), Some(num(up)?)),
        [n, "=", v] => (*n, Some(num(v)?), Some(num(v)?)),
        [lo, "<=", n] if is_num(lo) => (*n, Some(num(lo)?), None),
        [n, "<=", up] => (*n, None, Some(num(up)?)),
        [n, ">=", lo] => (*n, Some(num(lo)?), None),
        _ => return Err(parse_error(line, format!("unsupported bound {text:?}"))),
    };
    let j = b.column(name);
    b.explicit_bounds[j] = true;
    let c = &mut b.model.columns[j];
    if let Some(lo) = lower {
        c.lower = lo;
    }
    if let Some(up) = upper {
        c.upper = up;
    }
    Ok(())
}

/// Parses the LP subset written by [`write_lp`].
pub fn parse_lp(text: &str) -> Result<MilpModel, IoError> {
    let mut b = Builder {
        model: MilpModel::new(""),
        index: HashMap::new(),
        explicit_bounds: Vec::new(),
    };
    let mut section = Section::Preamble;
    let mut objective: Tokens = Vec::new();
    let mut constraints: Tokens = Vec::new();
    let mut bounds: Vec<(usize, String)> = Vec::new();
    let mut binaries: Tokens = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if let Some(comment) = raw.trim_start().strip_prefix('\\') {
            if let Some(name) = comment.trim().strip_prefix("Problem name:") {
                b.model.name = name.trim().to_owned();
            }
            continue;
        }
        let content = raw.split('\\').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        if let Some(next) = section_header(content) {
            section = next;
            continue;
        }
        let tokens = || content.split_whitespace().map(move |t| (line, t.to_owned()));
        match section {
            Section::Preamble => {
                let lower = content.trim().to_ascii_lowercase();
                if lower.starts_with("max") {
                    return Err(parse_error(line, "only minimization is supported"));
                }
                if lower.starts_with("general") || lower.starts_with("semi") || lower.starts_with("sos") {
                    return Err(parse_error(line, format!("unsupported section {:?}", content.trim())));
                }
                return Err(parse_error(line, "content before the objective"));
            }
            Section::Objective => objective.extend(tokens()),
            Section::Constraints => constraints.extend(tokens()),
            Section::Bounds => bounds.push((line, content.to_owned())),
            Section::Binaries => binaries.extend(tokens()),
            Section::Done => return Err(parse_error(line, "content after End")),
        }
    }
    if section != Section::Done {
        return Err(parse_error(text.lines().count(), "missing End"));
    }

    parse_objective(&mut b, &objective)?;
    parse_constraints(&mut b, &constraints)?;
    for (line, content) in &bounds {
        parse_bound_line(&mut b, *line, content)?;
    }
    for (_, name) in &binaries {
        let j = b.column(name);
        let explicit = b.explicit_bounds[j];
        let c = &mut b.model.columns[j];
        c.binary = true;
        if !explicit {
            c.lower = 0.0;
            c.upper = 1.0;
        }
    }
    Ok(b.model)
}
