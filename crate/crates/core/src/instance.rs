//! Deterministic planning data: regions, horizon, inventories, production
//! and the per-region sharing parameters.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Current version of the instance document layout.
pub const INSTANCE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub id: String,
    #[serde(default)]
    pub display_name: String,
}

impl Region {
    pub fn new(id: impl Into<String>) -> Self {
        let id = id.into();
        Self {
            display_name: id.clone(),
            id,
        }
    }
}

/// Planning horizon. Period `t` in `1..=num_periods` falls on
/// `start_date + (t - 1)` days; period 0 is the initial state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Horizon {
    pub start_date: NaiveDate,
    pub num_periods: usize,
}

impl Horizon {
    pub fn new(start_date: NaiveDate, num_periods: usize) -> Self {
        Self {
            start_date,
            num_periods,
        }
    }

    /// Calendar date of period `t` (1-based).
    pub fn date_of(&self, t: usize) -> NaiveDate {
        self.start_date + Duration::days(t as i64 - 1)
    }

    /// Period index of `date`, if it falls inside the horizon.
    pub fn period_of(&self, date: NaiveDate) -> Option<usize> {
        let offset = (date - self.start_date).num_days();
        if offset < 0 || offset >= self.num_periods as i64 {
            None
        } else {
            Some(offset as usize + 1)
        }
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        (1..=self.num_periods).map(|t| self.date_of(t))
    }
}

/// The deterministic inputs of the allocation model.
///
/// Per-region vectors are indexed in `regions` order; `production[t - 1]`
/// holds the units that become available at the start of period `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanningInstance {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub regions: Vec<Region>,
    pub horizon: Horizon,
    pub initial_region_inventory: Vec<u64>,
    pub central_initial: u64,
    pub production: Vec<u64>,
    pub gamma: Vec<f64>,
    pub tau: Vec<f64>,
    pub rho: Vec<f64>,
}

fn default_schema_version() -> u32 {
    INSTANCE_SCHEMA_VERSION
}

/// One broken invariant found by [`validate_instance`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub region: Option<String>,
    pub period: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.field)?;
        if let Some(r) = &self.region {
            write!(f, " [region {r}]")?;
        }
        if let Some(t) = self.period {
            write!(f, " [period {t}]")?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("invalid instance: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("period {period} outside 1..={num_periods}")]
    PeriodOutOfRange { period: usize, num_periods: usize },
    #[error("reading instance: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing instance document: {0}")]
    Parse(#[from] serde_json::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl InstanceError {
    pub fn violations(&self) -> &[Violation] {
        match self {
            InstanceError::Invalid(v) => v,
            _ => &[],
        }
    }
}

/// Checks every invariant and returns the instance unchanged when all hold.
/// All violations are reported, not only the first.
pub fn validate_instance(raw: PlanningInstance) -> Result<PlanningInstance, InstanceError> {
    let mut out = Vec::new();
    let mut push = |field, region: Option<&str>, period, message: String| {
        out.push(Violation {
            field,
            region: region.map(str::to_owned),
            period,
            message,
        })
    };

    if raw.regions.is_empty() {
        push("regions", None, None, "at least one region is required".into());
    }
    let mut seen = BTreeSet::new();
    for r in &raw.regions {
        if r.id.is_empty() {
            push("regions", None, None, "region id must be non-empty".into());
        } else if !seen.insert(r.id.as_str()) {
            push("regions", Some(&r.id), None, "duplicate region id".into());
        }
    }
    if raw.horizon.num_periods == 0 {
        push("horizon", None, None, "num_periods must be at least 1".into());
    }

    let n = raw.regions.len();
    for (field, len) in [
        ("initial_region_inventory", raw.initial_region_inventory.len()),
        ("gamma", raw.gamma.len()),
        ("tau", raw.tau.len()),
        ("rho", raw.rho.len()),
    ] {
        if len != n {
            push(
                field,
                None,
                None,
                format!("length mismatch: {len} entries for {n} regions"),
            );
        }
    }
    if raw.production.len() != raw.horizon.num_periods {
        push(
            "production",
            None,
            None,
            format!(
                "production vector length mismatch: {} entries for {} periods",
                raw.production.len(),
                raw.horizon.num_periods
            ),
        );
    }

    let region_id = |i: usize| raw.regions.get(i).map(|r| r.id.as_str());
    for (name, values, unit) in [
        ("gamma", &raw.gamma, true),
        ("tau", &raw.tau, true),
        ("rho", &raw.rho, false),
    ] {
        for (i, &v) in values.iter().enumerate() {
            let bad = if unit {
                !(0.0..=1.0).contains(&v)
            } else {
                !(v >= 0.0 && v.is_finite())
            };
            if bad {
                let bound = if unit { "[0,1]" } else { "[0,inf)" };
                push(name, region_id(i), None, format!("{name} out of {bound}: {v}"));
            }
        }
    }

    if out.is_empty() {
        Ok(raw)
    } else {
        Err(InstanceError::Invalid(out))
    }
}

/// Usable share of a region's starting inventory: `(1 - gamma) * y`.
pub fn usable_initial_inventory(inventory: u64, gamma: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&gamma));
    (1.0 - gamma) * inventory as f64
}

/// Units produced up to and including period `t`.
pub fn cumulative_production(production: &[u64], t: usize) -> Result<f64, InstanceError> {
    if t == 0 || t > production.len() {
        return Err(InstanceError::PeriodOutOfRange {
            period: t,
            num_periods: production.len(),
        });
    }
    Ok(production[..t].iter().map(|&q| q as f64).sum())
}

impl PlanningInstance {
    pub fn num_regions(&self) -> usize {
        self.regions.len()
    }

    pub fn num_periods(&self) -> usize {
        self.horizon.num_periods
    }

    /// `y_{n,0}` for every region.
    pub fn usable_inventory(&self) -> Vec<f64> {
        self.initial_region_inventory
            .iter()
            .zip(&self.gamma)
            .map(|(&y, &g)| usable_initial_inventory(y, g))
            .collect()
    }

    pub fn region_index(&self, id: &str) -> Option<usize> {
        self.regions.iter().position(|r| r.id == id)
    }

    /// Every unit the system can hold by the end of period `t`:
    /// usable regional stock, the central reserve and production so far.
    pub fn system_units(&self, t: usize) -> f64 {
        let produced: f64 = self.production[..t].iter().map(|&q| q as f64).sum();
        self.usable_inventory().iter().sum::<f64>() + self.central_initial as f64 + produced
    }

    /// Same parameters for every region; convenience for sweeps.
    pub fn with_uniform_rates(mut self, gamma: f64, tau: f64, rho: f64) -> Self {
        let n = self.regions.len();
        self.gamma = vec![gamma; n];
        self.tau = vec![tau; n];
        self.rho = vec![rho; n];
        self
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        validate_instance(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, InstanceError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }
}

/// Daily production schedule with a single step change, e.g. 100/day
/// until a switch date and 300/day from it on.
pub fn step_production(horizon: &Horizon, before: u64, switch: NaiveDate, after: u64) -> Vec<u64> {
    horizon
        .dates()
        .map(|d| if d < switch { before } else { after })
        .collect()
}
