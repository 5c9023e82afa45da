//! Summary metrics over per-scenario plans and the serialized run report.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Horizon, PlanningInstance};
use crate::model::{BigMRule, ScenarioPlan};
use crate::scenario::{CaseSpec, ScenarioSet};
use crate::solver::{PlanSolution, SolveLimits, SolveStatus, Strategy};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{plans} plans for {probabilities} probabilities")]
    CountMismatch { plans: usize, probabilities: usize },
    #[error("no scenarios to report on")]
    Empty,
    #[error("scenario {scenario} has a plan shape different from scenario 0")]
    Shape { scenario: usize },
    #[error("region index {0} out of range")]
    Region(usize),
    #[error("scenario {scenario} has no plan (status {status:?})")]
    MissingPlan { scenario: usize, status: SolveStatus },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Shape `(regions, periods)` shared by all plans.
fn check(plans: &[ScenarioPlan], probabilities: &[f64]) -> Result<(usize, usize), ReportError> {
    if plans.len() != probabilities.len() {
        return Err(ReportError::CountMismatch {
            plans: plans.len(),
            probabilities: probabilities.len(),
        });
    }
    let first = plans.first().ok_or(ReportError::Empty)?;
    let shape = (first.e.len(), first.e.first().map_or(0, Vec::len));
    for (w, p) in plans.iter().enumerate() {
        let rows_ok = |m: &Vec<Vec<f64>>| m.len() == shape.0 && m.iter().all(|r| r.len() == shape.1);
        let flows_ok = |m: &Vec<Vec<f64>>| m.is_empty() || rows_ok(m);
        if !rows_ok(&p.e) || !flows_ok(&p.x) || !flows_ok(&p.z) {
            return Err(ReportError::Shape { scenario: w });
        }
    }
    Ok(shape)
}

/// `sum_w p_w sum_{n,t} e`.
pub fn total_shortage(plans: &[ScenarioPlan], probabilities: &[f64]) -> Result<f64, ReportError> {
    check(plans, probabilities)?;
    Ok(plans
        .iter()
        .zip(probabilities)
        .map(|(plan, p)| p * plan.total_shortage())
        .sum())
}

/// Expected system-wide shortage per period; entry `t - 1` is period `t`.
pub fn daily_shortage(plans: &[ScenarioPlan], probabilities: &[f64]) -> Result<Vec<f64>, ReportError> {
    let (regions, periods) = check(plans, probabilities)?;
    let mut curve = vec![0.0; periods];
    for (plan, p) in plans.iter().zip(probabilities) {
        for (t, day) in curve.iter_mut().enumerate() {
            *day += p * (0..regions).map(|n| plan.e[n][t]).sum::<f64>();
        }
    }
    Ok(curve)
}

/// Expected shortage of region `n` in each period.
fn regional_shortage(plans: &[ScenarioPlan], probabilities: &[f64], n: usize) -> Vec<f64> {
    let periods = plans[0].e[n].len();
    (0..periods)
        .map(|t| plans.iter().zip(probabilities).map(|(plan, p)| p * plan.e[n][t]).sum())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstDay {
    pub value: f64,
    /// 1-based.
    pub period: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstDayState {
    pub value: f64,
    pub period: usize,
    pub region: usize,
}

/// Largest expected daily shortage; the earliest period wins ties.
pub fn worst_day(plans: &[ScenarioPlan], probabilities: &[f64]) -> Result<WorstDay, ReportError> {
    let curve = daily_shortage(plans, probabilities)?;
    let mut best = WorstDay { value: 0.0, period: 1 };
    for (i, &v) in curve.iter().enumerate() {
        if i == 0 || v > best.value {
            best = WorstDay { value: v, period: i + 1 };
        }
    }
    Ok(best)
}

/// Largest expected shortage of a single region on a single day; ties go
/// to the earliest period, then to the first region.
pub fn worst_day_state(plans: &[ScenarioPlan], probabilities: &[f64]) -> Result<WorstDayState, ReportError> {
    let (regions, periods) = check(plans, probabilities)?;
    let grid: Vec<Vec<f64>> = (0..regions).map(|n| regional_shortage(plans, probabilities, n)).collect();
    let mut best = WorstDayState {
        value: f64::NEG_INFINITY,
        period: 1,
        region: 0,
    };
    for t in 0..periods {
        for (n, row) in grid.iter().enumerate() {
            if row[t] > best.value {
                best = WorstDayState {
                    value: row[t],
                    period: t + 1,
                    region: n,
                };
            }
        }
    }
    if best.value == f64::NEG_INFINITY {
        best.value = 0.0;
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRow {
    pub region: String,
    pub total_inflow: f64,
    pub total_outflow: f64,
    pub net_flow: f64,
}

/// Expected units sent to region `n` (`x`) and sent back from it (`z`).
pub fn flows(
    plans: &[ScenarioPlan],
    probabilities: &[f64],
    n: usize,
    region: impl Into<String>,
) -> Result<FlowRow, ReportError> {
    let (regions, _) = check(plans, probabilities)?;
    if n >= regions {
        return Err(ReportError::Region(n));
    }
    let expected = |pick: fn(&ScenarioPlan) -> &Vec<Vec<f64>>| -> f64 {
        plans
            .iter()
            .zip(probabilities)
            .map(|(plan, p)| p * pick(plan).get(n).map_or(0.0, |r| r.iter().sum::<f64>()))
            .sum()
    };
    let total_inflow = expected(|p| &p.x);
    let total_outflow = expected(|p| &p.z);
    Ok(FlowRow {
        region: region.into(),
        total_inflow,
        total_outflow,
        net_flow: total_inflow - total_outflow,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyShortage {
    pub period: usize,
    pub date: NaiveDate,
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatedWorstDay {
    pub value: f64,
    pub period: usize,
    pub date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatedWorstDayState {
    pub value: f64,
    pub period: usize,
    pub date: NaiveDate,
    pub region: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortageReport {
    pub total: f64,
    pub worst_day: DatedWorstDay,
    pub worst_day_state: DatedWorstDayState,
    pub daily: Vec<DailyShortage>,
    /// Unweighted total shortage of each scenario.
    pub per_scenario: Vec<f64>,
}

impl ShortageReport {
    pub fn compute(
        plans: &[ScenarioPlan],
        probabilities: &[f64],
        horizon: &Horizon,
        regions: &[String],
    ) -> Result<Self, ReportError> {
        let curve = daily_shortage(plans, probabilities)?;
        let day = worst_day(plans, probabilities)?;
        let state = worst_day_state(plans, probabilities)?;
        let region = regions.get(state.region).ok_or(ReportError::Region(state.region))?;
        Ok(Self {
            total: total_shortage(plans, probabilities)?,
            worst_day: DatedWorstDay {
                value: day.value,
                period: day.period,
                date: horizon.date_of(day.period),
            },
            worst_day_state: DatedWorstDayState {
                value: state.value,
                period: state.period,
                date: horizon.date_of(state.period),
                region: region.clone(),
            },
            daily: curve
                .iter()
                .enumerate()
                .map(|(i, &expected)| DailyShortage {
                    period: i + 1,
                    date: horizon.date_of(i + 1),
                    expected,
                })
                .collect(),
            per_scenario: plans.iter().map(ScenarioPlan::total_shortage).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowReport {
    pub rows: Vec<FlowRow>,
}

impl FlowReport {
    pub fn compute(plans: &[ScenarioPlan], probabilities: &[f64], regions: &[String]) -> Result<Self, ReportError> {
        let rows = regions
            .iter()
            .enumerate()
            .map(|(n, id)| flows(plans, probabilities, n, id.clone()))
            .collect::<Result<_, _>>()?;
        Ok(Self { rows })
    }
}

/// Model parameters echoed into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportParameters {
    pub horizon: Horizon,
    pub regions: Vec<String>,
    pub central_initial: u64,
    pub total_production: u64,
    pub gamma: Vec<f64>,
    pub tau: Vec<f64>,
    pub rho: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub scenario: usize,
    pub probability: f64,
    pub status: SolveStatus,
    pub objective: f64,
    pub best_bound: Option<f64>,
    pub node_count: usize,
}

/// Run metadata. Wall times are left out so equal runs give equal bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub case: CaseSpec,
    pub parameters: ReportParameters,
    pub strategy: Strategy,
    pub big_m: BigMRule,
    pub limits: SolveLimits,
    pub status: SolveStatus,
    pub objective: f64,
    pub best_bound: Option<f64>,
    pub scenarios: Vec<ScenarioSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub schema_version: u32,
    pub metadata: RunMetadata,
    pub shortage: ShortageReport,
    pub flows: FlowReport,
    /// Full per-scenario decisions, in scenario order.
    pub plans: Vec<ScenarioPlan>,
}

impl ReportBundle {
    pub fn from_solution(
        instance: &PlanningInstance,
        scenarios: &ScenarioSet,
        solution: &PlanSolution,
        limits: &SolveLimits,
    ) -> Result<Self, ReportError> {
        let plans: Vec<ScenarioPlan> = solution
            .outcomes
            .iter()
            .map(|o| {
                o.plan.clone().ok_or(ReportError::MissingPlan {
                    scenario: o.scenario,
                    status: o.status,
                })
            })
            .collect::<Result<_, _>>()?;
        let probabilities: Vec<f64> = solution.outcomes.iter().map(|o| o.probability).collect();
        let regions: Vec<String> = instance.regions.iter().map(|r| r.id.clone()).collect();
        let shortage = ShortageReport::compute(&plans, &probabilities, &instance.horizon, &regions)?;
        let flows = FlowReport::compute(&plans, &probabilities, &regions)?;
        let metadata = RunMetadata {
            seed: scenarios.seed,
            case: scenarios.case.clone(),
            parameters: ReportParameters {
                horizon: instance.horizon,
                regions,
                central_initial: instance.central_initial,
                total_production: instance.production.iter().sum(),
                gamma: instance.gamma.clone(),
                tau: instance.tau.clone(),
                rho: instance.rho.clone(),
            },
            strategy: solution.strategy,
            big_m: solution.big_m,
            limits: *limits,
            status: solution.status,
            objective: solution.objective,
            best_bound: solution.best_bound.is_finite().then_some(solution.best_bound),
            scenarios: solution
                .outcomes
                .iter()
                .map(|o| ScenarioSummary {
                    scenario: o.scenario,
                    probability: o.probability,
                    status: o.status,
                    objective: o.objective,
                    best_bound: o.best_bound,
                    node_count: o.node_count,
                })
                .collect(),
        };
        Ok(Self {
            schema_version: REPORT_SCHEMA_VERSION,
            metadata,
            shortage,
            flows,
            plans,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    /// The whole bundle.
    Json,
    /// The flow table, one row per region.
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown report format {other:?} (expected json or csv)")),
        }
    }
}

pub fn emit_report(bundle: &ReportBundle, format: ReportFormat) -> Result<Vec<u8>, ReportError> {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(bundle)?;
            out.push(b'\n');
            Ok(out)
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in &bundle.flows.rows {
                w.serialize(row)?;
            }
            w.flush().map_err(csv::Error::from)?;
            Ok(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?)
        }
    }
}

/// The expected daily shortage curve as `period,date,expected` CSV.
pub fn emit_daily_csv(bundle: &ReportBundle) -> Result<Vec<u8>, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for day in &bundle.shortage.daily {
        w.serialize(day)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?)
}

pub fn parse_report_json(bytes: &[u8]) -> Result<ReportBundle, ReportError> {
    Ok(serde_json::from_slice(bytes)?)
}

/// A short human-readable summary.
pub fn render_summary(bundle: &ReportBundle) -> String {
    let s = &bundle.shortage;
    let mut out = format!(
        "status: {:?}\ntotal shortage: {:.2} ventilator-days\nworst day: {:.2} on {}\nworst day and state: {:.2} on {} in {}\n",
        bundle.metadata.status,
        s.total,
        s.worst_day.value,
        s.worst_day.date,
        s.worst_day_state.value,
        s.worst_day_state.date,
        s.worst_day_state.region,
    );
    out.push_str("region        inflow     outflow         net\n");
    for r in &bundle.flows.rows {
        out.push_str(&format!(
            "{:<10} {:>10.2} {:>11.2} {:>11.2}\n",
            r.region, r.total_inflow, r.total_outflow, r.net_flow
        ));
    }
    out
}
