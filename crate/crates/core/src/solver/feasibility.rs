use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{ConstraintFamily, MilpModel, RowKey, Sense, VariableKey};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ViolationTarget {
    Row {
        index: usize,
        name: String,
        family: Option<ConstraintFamily>,
        key: Option<RowKey>,
    },
    Bound {
        index: usize,
        name: String,
        key: Option<VariableKey>,
    },
    Integrality {
        index: usize,
        name: String,
        key: Option<VariableKey>,
    },
}

/// One violated row, bound or integrality requirement. `amount` is the
/// positive distance to feasibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityViolation {
    pub target: ViolationTarget,
    pub amount: f64,
}

impl fmt::Display for FeasibilityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.target {
            ViolationTarget::Row { name, family, .. } => match family {
                Some(fam) => write!(f, "row {name} ({fam}) violated by {}", self.amount),
                None => write!(f, "row {name} violated by {}", self.amount),
            },
            ViolationTarget::Bound { name, .. } => write!(f, "column {name} out of bounds by {}", self.amount),
            ViolationTarget::Integrality { name, .. } => {
                write!(f, "binary {name} is fractional by {}", self.amount)
            }
        }
    }
}

/// Lists every requirement of `model` that `assignment` misses by more than
/// `tol`. An empty result means the assignment is feasible.
pub fn check_feasibility(model: &MilpModel, assignment: &[f64], tol: f64) -> Vec<FeasibilityViolation> {
    let mut out = Vec::new();
    let dir = model.directory.as_ref();
    let column_key = |j: usize| dir.and_then(|d| d.grid.key_of(j).ok());

    if assignment.len() != model.columns.len() {
        out.push(FeasibilityViolation {
            target: ViolationTarget::Bound {
                index: assignment.len().min(model.columns.len()),
                name: format!("<{} values for {} columns>", assignment.len(), model.columns.len()),
                key: None,
            },
            amount: f64::INFINITY,
        });
        return out;
    }

    for (j, (c, &v)) in model.columns.iter().zip(assignment).enumerate() {
        let miss = (c.lower - v).max(v - c.upper).max(0.0);
        if miss > tol || !v.is_finite() {
            out.push(FeasibilityViolation {
                target: ViolationTarget::Bound {
                    index: j,
                    name: c.name.clone(),
                    key: column_key(j),
                },
                amount: if v.is_finite() { miss } else { f64::INFINITY },
            });
        }
        if c.binary {
            let frac = (v - v.round()).abs();
            if frac > tol {
                out.push(FeasibilityViolation {
                    target: ViolationTarget::Integrality {
                        index: j,
                        name: c.name.clone(),
                        key: column_key(j),
                    },
                    amount: frac,
                });
            }
        }
    }

    for (i, row) in model.rows.iter().enumerate() {
        let lhs = row.activity(assignment);
        let miss = match row.sense {
            Sense::Le => lhs - row.rhs,
            Sense::Ge => row.rhs - lhs,
            Sense::Eq => (lhs - row.rhs).abs(),
        };
        if miss > tol {
            let key = dir.and_then(|d| d.row_keys.get(i).copied());
            out.push(FeasibilityViolation {
                target: ViolationTarget::Row {
                    index: i,
                    name: row.name.clone(),
                    family: key.map(|k| k.family),
                    key,
                },
                amount: miss,
            });
        }
    }
    out
}
