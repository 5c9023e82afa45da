//! LP relaxation, branch-and-bound, feasibility checking and LP/MPS
//! interchange for [`MilpModel`]s.

mod bnb;
mod feasibility;
pub mod io;
mod plan;
pub mod simplex;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::MilpModel;

pub use bnb::branch_and_bound;
pub use feasibility::{check_feasibility, FeasibilityViolation, ViolationTarget};
pub use plan::{solve_plan, solve_plan_with_progress, PlanSolution, ScenarioOutcome, Strategy};
pub use simplex::{solve_lp, LpOptions, LpSolution, LpStatus};

/// Integrality tolerance on binaries.
pub const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("numerical failure at iteration {iteration}: pivot {pivot:e} in row {row}, column {column}")]
    Numerical {
        iteration: usize,
        row: usize,
        column: usize,
        pivot: f64,
    },
    #[error("simplex iteration limit reached after {iterations} iterations")]
    IterationLimit { iterations: usize },
    #[error("model is not well formed: {0}")]
    Malformed(String),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveLimits {
    /// Seconds.
    pub time_limit: f64,
    pub relative_gap: f64,
    pub absolute_gap: f64,
    #[serde(default)]
    pub node_limit: Option<usize>,
}

impl Default for SolveLimits {
    fn default() -> Self {
        Self {
            time_limit: 3600.0,
            relative_gap: 1e-6,
            absolute_gap: 1e-9,
            node_limit: None,
        }
    }
}

impl SolveLimits {
    pub fn validate(&self) -> Result<(), String> {
        let ok = self.time_limit > 0.0
            && self.relative_gap > 0.0
            && self.absolute_gap > 0.0
            && self.node_limit.is_none_or(|n| n > 0);
        if ok {
            Ok(())
        } else {
            Err(format!("solve limits must be positive: {self:?}"))
        }
    }

    pub fn time_limit(&self) -> Duration {
        Duration::from_secs_f64(self.time_limit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    /// Limit reached with an incumbent and a valid bound.
    FeasibleTimeLimit,
    /// Limit reached before any integer-feasible point was found.
    TimeLimitNoSolution,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub incumbent: Option<Vec<f64>>,
    pub objective: f64,
    pub best_bound: f64,
    pub node_count: usize,
    pub simplex_iterations: usize,
    /// Seconds.
    pub wall_time: f64,
}

impl SolveResult {
    pub fn has_incumbent(&self) -> bool {
        self.incumbent.is_some()
    }

    pub fn gap(&self) -> f64 {
        if self.incumbent.is_none() {
            return f64::INFINITY;
        }
        self.objective - self.best_bound
    }
}

/// Solves the model with binaries relaxed to `[0, 1]`.
pub fn solve_lp_relaxation(model: &MilpModel) -> Result<SolveResult, SolverError> {
    if !model.is_well_formed() {
        return Err(SolverError::Malformed("row references a missing column".into()));
    }
    let start = std::time::Instant::now();
    let lower: Vec<f64> = model.columns.iter().map(|c| c.lower).collect();
    let upper: Vec<f64> = model.columns.iter().map(|c| c.upper).collect();
    let lp = solve_lp(model, &lower, &upper, &LpOptions::default())?;
    let wall_time = start.elapsed().as_secs_f64();
    Ok(match lp.status {
        LpStatus::Optimal => SolveResult {
            status: SolveStatus::Optimal,
            objective: lp.objective,
            best_bound: lp.objective,
            incumbent: Some(lp.values),
            node_count: 1,
            simplex_iterations: lp.iterations,
            wall_time,
        },
        LpStatus::Infeasible => SolveResult {
            status: SolveStatus::Infeasible,
            incumbent: None,
            objective: f64::INFINITY,
            best_bound: f64::INFINITY,
            node_count: 1,
            simplex_iterations: lp.iterations,
            wall_time,
        },
        LpStatus::Unbounded => SolveResult {
            status: SolveStatus::Unbounded,
            incumbent: None,
            objective: f64::NEG_INFINITY,
            best_bound: f64::NEG_INFINITY,
            node_count: 1,
            simplex_iterations: lp.iterations,
            wall_time,
        },
    })
}
