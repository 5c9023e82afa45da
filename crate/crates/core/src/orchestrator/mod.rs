//! End-to-end runs: load inputs, draw scenarios, solve and report. Also the
//! background job service and its HTTP front end.

mod http;
mod jobs;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{validate_instance, InstanceError, PlanningInstance};
use crate::model::BigMRule;
use crate::report::{emit_daily_csv, emit_report, ReportBundle, ReportFormat};
use crate::scenario::{generate_scenarios, load_forecast_file, CaseLabel, CaseSpec, ForecastSeries, ScenarioSet};
use crate::solver::{solve_plan_with_progress, SolveLimits, Strategy};

pub use http::{router, serve};
pub use jobs::{JobError, JobRecord, JobService, JobState, Progress};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// A file path, resolved against the config's base directory, or the
/// value itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    Path(PathBuf),
    Inline(T),
}

impl<T> Source<T> {
    fn resolve(&self, base: &Path) -> Option<PathBuf> {
        match self {
            Source::Path(p) if p.is_absolute() => Some(p.clone()),
            Source::Path(p) => Some(base.join(p)),
            Source::Inline(_) => None,
        }
    }

    fn rebased(&mut self, base: &Path) {
        if let Some(path) = self.resolve(base) {
            *self = Source::Path(fs::canonicalize(&path).unwrap_or(path));
        }
    }
}

/// A preset name such as `"IV"` or a full custom spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CaseChoice {
    Preset(CaseLabel),
    Custom(CaseSpec),
}

impl CaseChoice {
    pub fn spec(&self) -> CaseSpec {
        match self {
            CaseChoice::Preset(label) => CaseSpec::preset(*label),
            CaseChoice::Custom(spec) => spec.clone(),
        }
    }
}

/// Uniform overrides applied to the loaded instance, for what-if runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParameterOverrides {
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub central_initial: Option<u64>,
}

impl ParameterOverrides {
    pub fn apply(&self, mut instance: PlanningInstance) -> PlanningInstance {
        let n = instance.regions.len();
        if let Some(g) = self.gamma {
            instance.gamma = vec![g; n];
        }
        if let Some(t) = self.tau {
            instance.tau = vec![t; n];
        }
        if let Some(r) = self.rho {
            instance.rho = vec![r; n];
        }
        if let Some(i) = self.central_initial {
            instance.central_initial = i;
        }
        instance
    }

    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

/// Where a run writes its files. Nothing is written when `dir` is unset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputPaths {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

fn default_case() -> CaseChoice {
    CaseChoice::Preset(CaseLabel::IV)
}

fn default_config_version() -> u32 {
    CONFIG_SCHEMA_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default = "default_config_version")]
    pub schema_version: u32,
    pub instance: Source<PlanningInstance>,
    /// Forecast CSV path or inline series; needed unless `scenarios` is given.
    #[serde(default)]
    pub forecast: Option<Source<Vec<ForecastSeries>>>,
    /// A previously generated scenario set, used instead of sampling.
    #[serde(default)]
    pub scenarios: Option<Source<ScenarioSet>>,
    #[serde(default = "default_case")]
    pub case: CaseChoice,
    /// Overrides the case's scenario count.
    #[serde(default)]
    pub scenario_count: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub limits: SolveLimits,
    #[serde(default)]
    pub strategy: Strategy,
    #[serde(default)]
    pub big_m: BigMRule,
    #[serde(default, skip_serializing_if = "ParameterOverrides::is_empty")]
    pub overrides: ParameterOverrides,
    #[serde(default)]
    pub output: OutputPaths,
}

impl RunConfig {
    pub fn new(instance: Source<PlanningInstance>, forecast: Source<Vec<ForecastSeries>>) -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            instance,
            forecast: Some(forecast),
            scenarios: None,
            case: default_case(),
            scenario_count: None,
            seed: 0,
            limits: SolveLimits::default(),
            strategy: Strategy::default(),
            big_m: BigMRule::default(),
            overrides: ParameterOverrides::default(),
            output: OutputPaths::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, RunError> {
        serde_json::from_str(text).map_err(|e| RunError::new(Stage::Config, e))
    }

    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<(Self, PathBuf), RunError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| RunError::new(Stage::Config, format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((Self::from_json(&text)?, base))
    }

    /// The same config with every input path made absolute.
    pub fn with_resolved_paths(&self, base: &Path) -> Self {
        let mut c = self.clone();
        c.instance.rebased(base);
        if let Some(f) = &mut c.forecast {
            f.rebased(base);
        }
        if let Some(s) = &mut c.scenarios {
            s.rebased(base);
        }
        c
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn case_spec(&self) -> CaseSpec {
        let spec = self.case.spec();
        match self.scenario_count {
            Some(k) => spec.with_scenario_count(k),
            None => spec,
        }
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let fail = |m: String| Err(RunError::new(Stage::Config, m));
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return fail(format!("unsupported config schema_version {}", self.schema_version));
        }
        if self.scenario_count == Some(0) {
            return fail("scenario_count must be at least 1".into());
        }
        if self.forecast.is_none() && self.scenarios.is_none() {
            return fail("either forecast or scenarios is required".into());
        }
        self.case_spec().validate().map_err(|e| RunError::new(Stage::Config, e))?;
        self.limits.validate().map_err(|e| RunError::new(Stage::Config, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Config,
    Ingestion,
    Scenarios,
    Solve,
    Report,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Ingestion => "ingestion",
            Stage::Scenarios => "scenarios",
            Stage::Solve => "solve",
            Stage::Report => "report",
            Stage::Output => "output",
        })
    }
}

#[derive(Debug, Error)]
#[error("{stage} stage failed: {message}")]
pub struct RunError {
    pub stage: Stage,
    pub message: String,
}

impl RunError {
    pub fn new(stage: Stage, err: impl fmt::Display) -> Self {
        Self {
            stage,
            message: err.to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub instance: PlanningInstance,
    pub scenarios: ScenarioSet,
    pub report: ReportBundle,
}

fn load_instance(config: &RunConfig, base: &Path) -> Result<PlanningInstance, RunError> {
    let ingest = |e: InstanceError| RunError::new(Stage::Ingestion, e);
    let raw = match (&config.instance, config.instance.resolve(base)) {
        (_, Some(path)) => {
            PlanningInstance::load(&path).map_err(|e| RunError::new(Stage::Ingestion, format!("{}: {e}", path.display())))?
        }
        (Source::Inline(inst), None) => inst.clone(),
        (Source::Path(_), None) => unreachable!("paths always resolve"),
    };
    validate_instance(config.overrides.apply(raw)).map_err(ingest)
}

/// Inline series in instance region order.
fn order_series(series: &[ForecastSeries], instance: &PlanningInstance) -> Result<Vec<ForecastSeries>, RunError> {
    instance
        .regions
        .iter()
        .map(|r| {
            series
                .iter()
                .find(|s| s.region == r.id)
                .cloned()
                .ok_or_else(|| RunError::new(Stage::Ingestion, format!("forecast has no series for region {}", r.id)))
        })
        .collect()
}

fn load_scenarios(config: &RunConfig, base: &Path, instance: &PlanningInstance) -> Result<ScenarioSet, RunError> {
    if let Some(source) = &config.scenarios {
        return match (source, source.resolve(base)) {
            (_, Some(path)) => ScenarioSet::load(&path)
                .map_err(|e| RunError::new(Stage::Ingestion, format!("{}: {e}", path.display()))),
            (Source::Inline(set), None) => Ok(set.clone()),
            (Source::Path(_), None) => unreachable!("paths always resolve"),
        };
    }
    let source = config
        .forecast
        .as_ref()
        .ok_or_else(|| RunError::new(Stage::Config, "either forecast or scenarios is required"))?;
    let series = match (source, source.resolve(base)) {
        (_, Some(path)) => load_forecast_file(&path, &instance.horizon, &instance.regions)
            .map_err(|e| RunError::new(Stage::Ingestion, format!("{}: {e}", path.display())))?,
        (Source::Inline(series), None) => order_series(series, instance)?,
        (Source::Path(_), None) => unreachable!("paths always resolve"),
    };
    generate_scenarios(&series, &instance.horizon, &config.case_spec(), config.seed)
        .map_err(|e| RunError::new(Stage::Scenarios, e))
}

fn write_outputs(dir: &Path, config: &RunConfig, base: &Path, out: &RunOutput) -> Result<(), RunError> {
    let io = |e: std::io::Error| RunError::new(Stage::Output, format!("{}: {e}", dir.display()));
    let report = |e: crate::report::ReportError| RunError::new(Stage::Output, e);
    fs::create_dir_all(dir).map_err(io)?;
    fs::write(dir.join("config.json"), config.with_resolved_paths(base).to_json()).map_err(io)?;
    fs::write(dir.join("scenarios.json"), out.scenarios.to_json()).map_err(io)?;
    fs::write(
        dir.join("report.json"),
        emit_report(&out.report, ReportFormat::Json).map_err(report)?,
    )
    .map_err(io)?;
    fs::write(dir.join("flows.csv"), emit_report(&out.report, ReportFormat::Csv).map_err(report)?).map_err(io)?;
    fs::write(dir.join("daily.csv"), emit_daily_csv(&out.report).map_err(report)?).map_err(io)?;
    Ok(())
}

/// Validates the config, loads the instance and draws (or loads) the
/// scenario set, without solving.
pub fn prepare(config: &RunConfig, base: &Path) -> Result<(PlanningInstance, ScenarioSet), RunError> {
    config.validate()?;
    let instance = load_instance(config, base)?;
    let scenarios = load_scenarios(config, base, &instance)?;
    Ok((instance, scenarios))
}

/// Runs the whole pipeline, reporting `(solved, total)` scenario counts as
/// solves finish. Relative paths resolve against `base`.
pub fn run_with_progress(
    config: &RunConfig,
    base: &Path,
    on_progress: &(dyn Fn(Progress) + Sync),
) -> Result<RunOutput, RunError> {
    let (instance, scenarios) = prepare(config, base)?;
    let total = scenarios.len();
    on_progress(Progress { solved: 0, total });
    log::info!(
        "solving {} scenarios over {} regions and {} days",
        total,
        instance.num_regions(),
        instance.num_periods()
    );
    let solved = AtomicUsize::new(0);
    let solution = solve_plan_with_progress(
        &instance,
        &scenarios,
        config.strategy,
        config.big_m,
        &config.limits,
        &|_| {
            let done = solved.fetch_add(1, Ordering::SeqCst) + 1;
            on_progress(Progress { solved: done, total });
        },
    )
    .map_err(|e| RunError::new(Stage::Solve, e))?;
    let report = ReportBundle::from_solution(&instance, &scenarios, &solution, &config.limits)
        .map_err(|e| RunError::new(Stage::Report, e))?;
    let out = RunOutput {
        instance,
        scenarios,
        report,
    };
    if let Some(dir) = &config.output.dir {
        let dir = if dir.is_absolute() { dir.clone() } else { base.join(dir) };
        write_outputs(&dir, config, base, &out)?;
    }
    Ok(out)
}

/// Runs the pipeline with paths relative to the working directory.
pub fn run(config: &RunConfig) -> Result<RunOutput, RunError> {
    run_with_progress(config, Path::new(""), &|_| {})
}
