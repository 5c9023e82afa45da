//! Text interchange with external solvers: CPLEX-style LP files, free MPS,
//! and `name value` solution files.
//!
//! Only the subset the planner emits is supported: minimization, `<=`/`=`/`>=`
//! rows, column bounds and binary columns. Column names must not parse as
//! numbers.

mod lp;
mod mps;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{MilpModel, Row};

pub use lp::{parse_lp, write_lp};
pub use mps::{parse_mps, write_mps};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelFormat {
    Lp,
    Mps,
}

impl ModelFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ModelFormat::Lp => "lp",
            ModelFormat::Mps => "mps",
        }
    }
}

impl fmt::Display for ModelFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

impl FromStr for ModelFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lp" => Ok(ModelFormat::Lp),
            "mps" => Ok(ModelFormat::Mps),
            other => Err(format!("unknown model format {other:?} (expected lp or mps)")),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum IoError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown column {name:?}")]
    UnknownColumn { line: usize, name: String },
    #[error("line {line}: column {name:?} given twice")]
    DuplicateColumn { line: usize, name: String },
    #[error("file is not valid UTF-8")]
    Encoding,
}

pub(crate) fn parse_error(line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        message: message.into(),
    }
}

pub(crate) fn parse_number(line: usize, token: &str) -> Result<f64, IoError> {
    match token.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        _ => token
            .parse::<f64>()
            .map_err(|_| parse_error(line, format!("expected a number, found {token:?}"))),
    }
}

pub fn export_model(model: &MilpModel, format: ModelFormat) -> Vec<u8> {
    match format {
        ModelFormat::Lp => write_lp(model).into_bytes(),
        ModelFormat::Mps => write_mps(model).into_bytes(),
    }
}

pub fn import_model(bytes: &[u8], format: ModelFormat) -> Result<MilpModel, IoError> {
    let text = std::str::from_utf8(bytes).map_err(|_| IoError::Encoding)?;
    match format {
        ModelFormat::Lp => parse_lp(text),
        ModelFormat::Mps => parse_mps(text),
    }
}

/// One `name value` line per column, in column order.
pub fn write_solution(model: &MilpModel, values: &[f64]) -> String {
    let mut out = String::new();
    for (c, v) in model.columns.iter().zip(values) {
        out.push_str(&c.name);
        out.push(' ');
        out.push_str(&v.to_string());
        out.push('\n');
    }
    out
}

/// Reads a solution written by an external solver. Columns that are not
/// mentioned are zero; blank lines and `#` comments are skipped.
pub fn parse_solution(model: &MilpModel, text: &str) -> Result<Vec<f64>, IoError> {
    let index: HashMap<&str, usize> = model
        .columns
        .iter()
        .enumerate()
        .map(|(j, c)| (c.name.as_str(), j))
        .collect();
    let mut values = vec![0.0; model.columns.len()];
    let mut seen = vec![false; model.columns.len()];
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let mut parts = content.split_whitespace();
        let (Some(name), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(parse_error(line, "expected `name value`"));
        };
        let &j = index.get(name).ok_or_else(|| IoError::UnknownColumn {
            line,
            name: name.to_owned(),
        })?;
        if seen[j] {
            return Err(IoError::DuplicateColumn {
                line,
                name: name.to_owned(),
            });
        }
        seen[j] = true;
        values[j] = parse_number(line, value)?;
    }
    Ok(values)
}

fn canonical_row(model: &MilpModel, row: &Row) -> (String, Vec<(String, u64)>, String, u64) {
    let mut terms: Vec<(String, u64)> = row
        .terms
        .iter()
        .filter(|(_, a)| *a != 0.0)
        .map(|&(j, a)| (model.columns[j].name.clone(), (a + 0.0).to_bits()))
        .collect();
    terms.sort();
    (row.name.clone(), terms, row.sense.to_string(), (row.rhs + 0.0).to_bits())
}

/// Same columns in the same order and the same rows in any order. Zero
/// coefficients and the variable directory are ignored.
pub fn same_model_up_to_row_order(a: &MilpModel, b: &MilpModel) -> bool {
    if a.columns != b.columns || a.rows.len() != b.rows.len() {
        return false;
    }
    let rows = |m: &MilpModel| -> BTreeMap<String, _> {
        m.rows.iter().map(|r| (r.name.clone(), canonical_row(m, r))).collect()
    };
    let ra = rows(a);
    ra.len() == a.rows.len() && ra == rows(b)
}
