use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{branch_and_bound, SolveLimits, SolveStatus, SolverError};
use crate::instance::PlanningInstance;
use crate::model::{build_extensive_form, single_scenario_model, BigMRule, ScenarioPlan};
use crate::scenario::ScenarioSet;

/// How a multi-scenario plan is solved. Scenarios share no variables, so
/// both give the same optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// One branch-and-bound per scenario, run in parallel.
    #[default]
    PerScenario,
    /// One branch-and-bound on the extensive form.
    Monolithic,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::PerScenario => "per-scenario",
            Strategy::Monolithic => "monolithic",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per-scenario" => Ok(Strategy::PerScenario),
            "monolithic" => Ok(Strategy::Monolithic),
            other => Err(format!("unknown strategy {other:?} (expected per-scenario or monolithic)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub scenario: usize,
    pub probability: f64,
    pub status: SolveStatus,
    /// Total shortage of this scenario, unweighted.
    pub objective: f64,
    /// Lower bound on this scenario's shortage when one is known.
    pub best_bound: Option<f64>,
    pub node_count: usize,
    pub simplex_iterations: usize,
    /// Seconds.
    pub wall_time: f64,
    pub plan: Option<ScenarioPlan>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSolution {
    pub strategy: Strategy,
    pub big_m: BigMRule,
    pub status: SolveStatus,
    /// Probability-weighted total shortage.
    pub objective: f64,
    pub best_bound: f64,
    pub outcomes: Vec<ScenarioOutcome>,
    /// Seconds.
    pub wall_time: f64,
}

/// The weakest status wins: an infeasible scenario makes the plan
/// infeasible, a timed-out one makes it a time-limit result.
fn combine(statuses: impl Iterator<Item = SolveStatus>) -> SolveStatus {
    let rank = |s: SolveStatus| match s {
        SolveStatus::Optimal => 0,
        SolveStatus::FeasibleTimeLimit => 1,
        SolveStatus::TimeLimitNoSolution => 2,
        SolveStatus::Unbounded => 3,
        SolveStatus::Infeasible => 4,
    };
    statuses.max_by_key(|&s| rank(s)).unwrap_or(SolveStatus::Optimal)
}

fn solve_one(
    instance: &PlanningInstance,
    scenarios: &ScenarioSet,
    w: usize,
    rule: BigMRule,
    limits: &SolveLimits,
) -> Result<ScenarioOutcome, SolverError> {
    let model = single_scenario_model(instance, scenarios, w, rule)?;
    let result = branch_and_bound(&model, limits)?;
    let plan = match (&result.incumbent, &model.directory) {
        (Some(values), Some(dir)) => Some(ScenarioPlan::extract(&dir.grid, values, w)?),
        _ => None,
    };
    Ok(ScenarioOutcome {
        scenario: w,
        probability: scenarios.probabilities[w],
        status: result.status,
        objective: result.objective,
        best_bound: result.best_bound.is_finite().then_some(result.best_bound),
        node_count: result.node_count,
        simplex_iterations: result.simplex_iterations,
        wall_time: result.wall_time,
        plan,
    })
}

/// Solves every scenario of the set. `on_scenario_done` is called once per
/// finished scenario, from whichever worker thread finished it.
pub fn solve_plan_with_progress(
    instance: &PlanningInstance,
    scenarios: &ScenarioSet,
    strategy: Strategy,
    rule: BigMRule,
    limits: &SolveLimits,
    on_scenario_done: &(dyn Fn(usize) + Sync),
) -> Result<PlanSolution, SolverError> {
    limits.validate().map_err(SolverError::Malformed)?;
    let start = Instant::now();
    let outcomes: Vec<ScenarioOutcome> = match strategy {
        Strategy::PerScenario => (0..scenarios.len())
            .into_par_iter()
            .map(|w| {
                let out = solve_one(instance, scenarios, w, rule, limits);
                on_scenario_done(w);
                out
            })
            .collect::<Result<_, _>>()?,
        Strategy::Monolithic => {
            let model = build_extensive_form(instance, scenarios, rule)?;
            let result = branch_and_bound(&model, limits)?;
            let dir = model
                .directory
                .as_ref()
                .ok_or_else(|| SolverError::Malformed("extensive form has no directory".into()))?;
            let per_scenario_time = result.wall_time / scenarios.len().max(1) as f64;
            let outcomes = (0..scenarios.len())
                .map(|w| {
                    let plan = match &result.incumbent {
                        Some(values) => Some(ScenarioPlan::extract(&dir.grid, values, w)?),
                        None => None,
                    };
                    let objective = plan.as_ref().map_or(result.objective, ScenarioPlan::total_shortage);
                    on_scenario_done(w);
                    Ok(ScenarioOutcome {
                        scenario: w,
                        probability: scenarios.probabilities[w],
                        status: result.status,
                        objective,
                        best_bound: (result.status == SolveStatus::Optimal).then_some(objective),
                        node_count: result.node_count,
                        simplex_iterations: result.simplex_iterations,
                        wall_time: per_scenario_time,
                        plan,
                    })
                })
                .collect::<Result<Vec<_>, SolverError>>()?;
            let status = result.status;
            return Ok(PlanSolution {
                strategy,
                big_m: rule,
                status,
                objective: result.objective,
                best_bound: result.best_bound,
                outcomes,
                wall_time: start.elapsed().as_secs_f64(),
            });
        }
    };
    let status = combine(outcomes.iter().map(|o| o.status));
    let objective = outcomes.iter().map(|o| o.probability * o.objective).sum();
    let best_bound = outcomes
        .iter()
        .map(|o| o.probability * o.best_bound.unwrap_or(f64::NEG_INFINITY))
        .sum();
    Ok(PlanSolution {
        strategy,
        big_m: rule,
        status,
        objective,
        best_bound,
        outcomes,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

pub fn solve_plan(
    instance: &PlanningInstance,
    scenarios: &ScenarioSet,
    strategy: Strategy,
    rule: BigMRule,
    limits: &SolveLimits,
) -> Result<PlanSolution, SolverError> {
    solve_plan_with_progress(instance, scenarios, strategy, rule, limits, &|_| {})
}
