//! Forecast ingestion and tail/partition demand-scenario generation.
//!
//! Each forecast cell is a confidence interval `(lower, mean, upper)`. The
//! left tail spans `[lower, mean]` and the right tail `[mean, upper]`. A
//! scenario picks one tail and one of `partitions` equal-width slices of it,
//! then samples every (region, day) cell uniformly inside that same slice
//! of the cell's own interval.
//!
//! Randomness comes from `ChaCha8Rng::seed_from_u64(seed)`. Draw order per
//! scenario: one `f64` for the tail, one partition index, then one `f64`
//! per cell in region-major, day-minor order.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Horizon, Region};

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastRecord {
    pub date: NaiveDate,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastSeries {
    pub region: String,
    /// One record per horizon day, in date order.
    pub records: Vec<ForecastRecord>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("row {row}: interval order violated for {region} on {date}: lower={lower}, mean={mean}, upper={upper}")]
    IntervalOrder {
        row: usize,
        region: String,
        date: NaiveDate,
        lower: f64,
        mean: f64,
        upper: f64,
    },
    #[error("row {row}: unknown region {region}")]
    UnknownRegion { row: usize, region: String },
    #[error("row {row}: duplicate record for {region} on {date}")]
    Duplicate {
        row: usize,
        region: String,
        date: NaiveDate,
    },
    #[error("missing day: no forecast for {region} on {date}")]
    MissingDay { region: String, date: NaiveDate },
    #[error("forecasts cover {found} regions, expected {expected}")]
    RegionCount { found: usize, expected: usize },
    #[error("invalid case spec: {0}")]
    Case(String),
    #[error("invalid weights: {0}")]
    Weights(String),
    #[error("reading forecast: {0}")]
    Io(#[from] std::io::Error),
    #[error("scenario document: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    region: String,
    date: NaiveDate,
    mean: f64,
    lower: f64,
    upper: f64,
}

/// Reads the forecast CSV (`region,date,mean,lower,upper`) and returns one
/// series per region, in `regions` order. Rows dated outside the horizon
/// are ignored.
pub fn load_forecast<R: Read>(
    source: R,
    horizon: &Horizon,
    regions: &[Region],
) -> Result<Vec<ForecastSeries>, ScenarioError> {
    let index: BTreeMap<&str, usize> = regions
        .iter()
        .enumerate()
        .map(|(i, r)| (r.id.as_str(), i))
        .collect();
    let mut cells: Vec<Vec<Option<ForecastRecord>>> =
        vec![vec![None; horizon.num_periods]; regions.len()];

    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    for (i, row) in reader.deserialize::<CsvRow>().enumerate() {
        // header is line 1
        let line = i + 2;
        let row = row.map_err(|e| ScenarioError::Row {
            row: line,
            message: e.to_string(),
        })?;
        let Some(&n) = index.get(row.region.as_str()) else {
            return Err(ScenarioError::UnknownRegion {
                row: line,
                region: row.region,
            });
        };
        let ordered = row.lower.is_finite()
            && row.upper.is_finite()
            && 0.0 <= row.lower
            && row.lower <= row.mean
            && row.mean <= row.upper;
        if !ordered {
            return Err(ScenarioError::IntervalOrder {
                row: line,
                region: row.region,
                date: row.date,
                lower: row.lower,
                mean: row.mean,
                upper: row.upper,
            });
        }
        let Some(t) = horizon.period_of(row.date) else {
            continue;
        };
        let slot = &mut cells[n][t - 1];
        if slot.is_some() {
            return Err(ScenarioError::Duplicate {
                row: line,
                region: row.region,
                date: row.date,
            });
        }
        *slot = Some(ForecastRecord {
            date: row.date,
            mean: row.mean,
            lower: row.lower,
            upper: row.upper,
        });
    }

    regions
        .iter()
        .zip(cells)
        .map(|(region, days)| {
            let records = days
                .into_iter()
                .enumerate()
                .map(|(d, rec)| {
                    rec.ok_or_else(|| ScenarioError::MissingDay {
                        region: region.id.clone(),
                        date: horizon.date_of(d + 1),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(ForecastSeries {
                region: region.id.clone(),
                records,
            })
        })
        .collect()
}

pub fn load_forecast_file(
    path: impl AsRef<Path>,
    horizon: &Horizon,
    regions: &[Region],
) -> Result<Vec<ForecastSeries>, ScenarioError> {
    load_forecast(std::fs::File::open(path)?, horizon, regions)
}

/// Writes series back out in the CSV layout read by [`load_forecast`].
pub fn write_forecast_csv(series: &[ForecastSeries]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["region", "date", "mean", "lower", "upper"]).unwrap();
    for s in series {
        for r in &s.records {
            w.write_record([
                s.region.clone(),
                r.date.to_string(),
                r.mean.to_string(),
                r.lower.to_string(),
                r.upper.to_string(),
            ])
            .unwrap();
        }
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    Left,
    Right,
}

/// Value in the `k`-th of `partitions` equal slices of the chosen tail,
/// at relative position `u` within the slice.
pub fn sample_tail_partition(
    (lower, mean, upper): (f64, f64, f64),
    tail: Tail,
    k: usize,
    partitions: usize,
    u: f64,
) -> f64 {
    debug_assert!(k < partitions);
    let (start, end) = match tail {
        Tail::Left => (lower, mean),
        Tail::Right => (mean, upper),
    };
    let width = end - start;
    if width <= 0.0 {
        return start;
    }
    let v = start + (k as f64 + u) * (width / partitions as f64);
    v.clamp(start, end)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaseLabel {
    I,
    II,
    III,
    IV,
}

impl CaseLabel {
    pub const ALL: [CaseLabel; 4] = [CaseLabel::I, CaseLabel::II, CaseLabel::III, CaseLabel::IV];

    pub fn name(self) -> &'static str {
        match self {
            CaseLabel::I => "Average-I",
            CaseLabel::II => "Average-II",
            CaseLabel::III => "Worse than Average",
            CaseLabel::IV => "Severe",
        }
    }
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl std::str::FromStr for CaseLabel {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(CaseLabel::I),
            "II" | "2" => Ok(CaseLabel::II),
            "III" | "3" => Ok(CaseLabel::III),
            "IV" | "4" => Ok(CaseLabel::IV),
            other => Err(ScenarioError::Case(format!("unknown case preset {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSpec {
    /// Preset this spec came from; `None` for custom cases.
    #[serde(default)]
    pub label: Option<CaseLabel>,
    pub right_tail_prob: f64,
    pub right_tail_weight: f64,
    pub left_tail_weight: f64,
    #[serde(default = "default_partitions")]
    pub partitions: usize,
    #[serde(default = "default_scenario_count")]
    pub scenario_count: usize,
}

fn default_partitions() -> usize {
    50
}

fn default_scenario_count() -> usize {
    24
}

impl CaseSpec {
    pub fn preset(label: CaseLabel) -> Self {
        let (p, right, left) = match label {
            CaseLabel::I => (0.5, 1.0, 1.0),
            CaseLabel::II => (0.25, 0.25, 0.75),
            CaseLabel::III => (0.5, 0.5, 0.5),
            CaseLabel::IV => (0.75, 0.75, 0.25),
        };
        Self {
            label: Some(label),
            right_tail_prob: p,
            right_tail_weight: right,
            left_tail_weight: left,
            partitions: default_partitions(),
            scenario_count: default_scenario_count(),
        }
    }

    pub fn with_scenario_count(mut self, count: usize) -> Self {
        self.scenario_count = count;
        self
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut problems = Vec::new();
        if !(0.0..=1.0).contains(&self.right_tail_prob) {
            problems.push(format!("right_tail_prob {} not in [0,1]", self.right_tail_prob));
        }
        for (name, w) in [
            ("right_tail_weight", self.right_tail_weight),
            ("left_tail_weight", self.left_tail_weight),
        ] {
            if !(w > 0.0 && w.is_finite()) {
                problems.push(format!("{name} must be positive, got {w}"));
            }
        }
        if self.partitions == 0 {
            problems.push("partitions must be at least 1".into());
        }
        if self.scenario_count == 0 {
            problems.push("scenario_count must be at least 1".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError::Case(problems.join("; ")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandScenario {
    pub tail: Tail,
    pub partition: usize,
    pub raw_weight: f64,
    /// `demand[n][t - 1]`.
    pub demand: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub schema_version: u32,
    pub seed: u64,
    pub case: CaseSpec,
    pub regions: Vec<String>,
    pub horizon: Horizon,
    pub probabilities: Vec<f64>,
    pub scenarios: Vec<DemandScenario>,
}

impl ScenarioSet {
    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    /// Builds a set directly from demand matrices, e.g. for hand-made
    /// test cases. Weights are normalized into probabilities.
    pub fn from_demands(
        regions: Vec<String>,
        horizon: Horizon,
        demands: Vec<Vec<Vec<f64>>>,
        weights: &[f64],
    ) -> Result<Self, ScenarioError> {
        if demands.len() != weights.len() {
            return Err(ScenarioError::Weights(format!(
                "{} demand matrices for {} weights",
                demands.len(),
                weights.len()
            )));
        }
        let probabilities = normalize_weights(weights)?;
        let scenarios = demands
            .into_iter()
            .zip(weights)
            .map(|(demand, &w)| DemandScenario {
                tail: Tail::Left,
                partition: 0,
                raw_weight: w,
                demand,
            })
            .collect();
        Ok(Self {
            schema_version: SCENARIO_SCHEMA_VERSION,
            seed: 0,
            case: CaseSpec {
                label: None,
                right_tail_prob: 0.0,
                right_tail_weight: 1.0,
                left_tail_weight: 1.0,
                partitions: 1,
                scenario_count: weights.len(),
            },
            regions,
            horizon,
            probabilities,
            scenarios,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario set serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let set: ScenarioSet = serde_json::from_str(text)?;
        if set.scenarios.is_empty() || set.probabilities.len() != set.scenarios.len() {
            return Err(ScenarioError::Weights(
                "scenario and probability counts differ or are zero".into(),
            ));
        }
        let sum: f64 = set.probabilities.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || set.probabilities.iter().any(|&p| p <= 0.0) {
            return Err(ScenarioError::Weights(format!("probabilities sum to {sum}")));
        }
        Ok(set)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// `w / sum(w)`.
pub fn normalize_weights(raw: &[f64]) -> Result<Vec<f64>, ScenarioError> {
    if raw.is_empty() {
        return Err(ScenarioError::Weights("no weights".into()));
    }
    if let Some(w) = raw.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return Err(ScenarioError::Weights(format!("nonpositive weight {w}")));
    }
    let total: f64 = raw.iter().sum();
    Ok(raw.iter().map(|w| w / total).collect())
}

/// Draws `case.scenario_count` scenarios. Pure in `(forecasts, case, seed)`.
pub fn generate_scenarios(
    forecasts: &[ForecastSeries],
    horizon: &Horizon,
    case: &CaseSpec,
    seed: u64,
) -> Result<ScenarioSet, ScenarioError> {
    case.validate()?;
    if forecasts.is_empty() {
        return Err(ScenarioError::RegionCount {
            found: 0,
            expected: 1,
        });
    }
    for series in forecasts {
        for t in 1..=horizon.num_periods {
            let date = horizon.date_of(t);
            if series.records.get(t - 1).map(|r| r.date) != Some(date) {
                return Err(ScenarioError::MissingDay {
                    region: series.region.clone(),
                    date,
                });
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scenarios = Vec::with_capacity(case.scenario_count);
    for _ in 0..case.scenario_count {
        let tail = if rng.random::<f64>() < case.right_tail_prob {
            Tail::Right
        } else {
            Tail::Left
        };
        let partition = rng.random_range(0..case.partitions);
        let demand = forecasts
            .iter()
            .map(|s| {
                s.records[..horizon.num_periods]
                    .iter()
                    .map(|r| {
                        let u = rng.random::<f64>();
                        sample_tail_partition(
                            (r.lower, r.mean, r.upper),
                            tail,
                            partition,
                            case.partitions,
                            u,
                        )
                    })
                    .collect()
            })
            .collect();
        let raw_weight = match tail {
            Tail::Right => case.right_tail_weight,
            Tail::Left => case.left_tail_weight,
        };
        scenarios.push(DemandScenario {
            tail,
            partition,
            raw_weight,
            demand,
        });
    }
    let weights: Vec<f64> = scenarios.iter().map(|s| s.raw_weight).collect();
    Ok(ScenarioSet {
        schema_version: SCENARIO_SCHEMA_VERSION,
        seed,
        case: case.clone(),
        regions: forecasts.iter().map(|s| s.region.clone()).collect(),
        horizon: *horizon,
        probabilities: normalize_weights(&weights)?,
        scenarios,
    })
}
