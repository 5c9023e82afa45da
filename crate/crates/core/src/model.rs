//! The linearized extensive-form mixed-binary program.
//!
//! Per scenario `w` and region `n`, period `t` in `1..=T`:
//!
//! ```text
//! region balance     y[t-1] + x[t] - z[t] - y[t]             = 0
//! central balance    s[t-1] + sum z[t] - sum x[t] - s[t]     = -Q[t]
//! safety activation  y[t] - (1-tau) y[0] - M g[t]           >= rho d[t] - M
//! safety cap         z[t] - y[t] + (1-tau) y[0] + M g[t]    <= M - rho d[t]
//! safety switch      z[t] - M g[t]                          <= 0
//! central outflow    sum x[t] - s[t-1] - sum z[t]           <= Q[t]
//! shortage           e[t] + y[t]                            >= d[t]
//! ```
//!
//! plus `y[0] = (1-gamma) Y` and `s[0] = I`. Objective: `sum_w p_w sum e`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{cumulative_production, PlanningInstance};
use crate::scenario::ScenarioSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    X,
    Z,
    Y,
    S,
    E,
    G,
}

impl VarKind {
    pub const ALL: [VarKind; 6] = [VarKind::X, VarKind::Z, VarKind::Y, VarKind::S, VarKind::E, VarKind::G];

    pub fn letter(self) -> char {
        match self {
            VarKind::X => 'x',
            VarKind::Z => 'z',
            VarKind::Y => 'y',
            VarKind::S => 's',
            VarKind::E => 'e',
            VarKind::G => 'g',
        }
    }

    fn from_letter(c: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.letter().to_string() == c)
    }

    /// Stock variables exist for period 0 as well.
    pub fn has_initial_period(self) -> bool {
        matches!(self, VarKind::Y | VarKind::S)
    }
}

/// `(kind, region, period, scenario)`. `region` is `None` exactly for `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VariableKey {
    pub kind: VarKind,
    pub region: Option<usize>,
    pub period: usize,
    pub scenario: usize,
}

impl VariableKey {
    pub fn new(kind: VarKind, region: usize, period: usize, scenario: usize) -> Self {
        Self {
            kind,
            region: Some(region),
            period,
            scenario,
        }
    }

    pub fn central(period: usize, scenario: usize) -> Self {
        Self {
            kind: VarKind::S,
            region: None,
            period,
            scenario,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintFamily {
    RegionBalance,
    CentralBalance,
    SafetyActivation,
    SafetyCap,
    SafetySwitch,
    CentralOutflow,
    InitialRegion,
    InitialCentral,
    Shortage,
}

impl ConstraintFamily {
    pub const ALL: [ConstraintFamily; 9] = [
        ConstraintFamily::RegionBalance,
        ConstraintFamily::CentralBalance,
        ConstraintFamily::SafetyActivation,
        ConstraintFamily::SafetyCap,
        ConstraintFamily::SafetySwitch,
        ConstraintFamily::CentralOutflow,
        ConstraintFamily::InitialRegion,
        ConstraintFamily::InitialCentral,
        ConstraintFamily::Shortage,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            ConstraintFamily::RegionBalance => "region-balance",
            ConstraintFamily::CentralBalance => "central-balance",
            ConstraintFamily::SafetyActivation => "safety-activation",
            ConstraintFamily::SafetyCap => "safety-cap",
            ConstraintFamily::SafetySwitch => "safety-switch",
            ConstraintFamily::CentralOutflow => "central-outflow",
            ConstraintFamily::InitialRegion => "initial-region",
            ConstraintFamily::InitialCentral => "initial-central",
            ConstraintFamily::Shortage => "shortage",
        }
    }

    fn prefix(self) -> &'static str {
        match self {
            ConstraintFamily::RegionBalance => "rbal",
            ConstraintFamily::CentralBalance => "cbal",
            ConstraintFamily::SafetyActivation => "sact",
            ConstraintFamily::SafetyCap => "scap",
            ConstraintFamily::SafetySwitch => "ssw",
            ConstraintFamily::CentralOutflow => "cout",
            ConstraintFamily::InitialRegion => "yini",
            ConstraintFamily::InitialCentral => "sini",
            ConstraintFamily::Shortage => "short",
        }
    }

    fn is_central(self) -> bool {
        matches!(
            self,
            ConstraintFamily::CentralBalance | ConstraintFamily::CentralOutflow | ConstraintFamily::InitialCentral
        )
    }
}

impl fmt::Display for ConstraintFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RowKey {
    pub family: ConstraintFamily,
    pub region: Option<usize>,
    pub period: usize,
    pub scenario: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("key {0:?} is outside the variable grid")]
    OutOfGrid(VariableKey),
    #[error("key {0:?} has the wrong shape for its kind")]
    BadShape(VariableKey),
    #[error("column {0} is outside the variable grid")]
    BadColumn(usize),
    #[error("instance/scenario mismatch: {0}")]
    Mismatch(String),
    #[error("cannot decode name {0:?}")]
    BadName(String),
}

/// Bijection between [`VariableKey`]s and column indices. Columns are laid
/// out scenario-major so each scenario occupies one contiguous block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableGrid {
    pub regions: Vec<String>,
    pub periods: usize,
    /// Scenario labels, in block order.
    pub scenarios: Vec<usize>,
}

impl VariableGrid {
    pub fn new(regions: Vec<String>, periods: usize, scenarios: Vec<usize>) -> Self {
        Self {
            regions,
            periods,
            scenarios,
        }
    }

    fn n(&self) -> usize {
        self.regions.len()
    }

    pub fn block_len(&self) -> usize {
        self.n() + 1 + self.periods * (5 * self.n() + 1)
    }

    pub fn num_columns(&self) -> usize {
        self.block_len() * self.scenarios.len()
    }

    pub fn scenario_position(&self, label: usize) -> Option<usize> {
        self.scenarios.iter().position(|&s| s == label)
    }

    /// Column index of `key`.
    pub fn lookup(&self, key: VariableKey) -> Result<usize, ModelError> {
        let block = self
            .scenario_position(key.scenario)
            .ok_or(ModelError::OutOfGrid(key))?;
        let base = block * self.block_len();
        let n = self.n();
        match (key.kind, key.region) {
            (VarKind::S, Some(_)) => Err(ModelError::BadShape(key)),
            (VarKind::S, None) => {
                if key.period > self.periods {
                    return Err(ModelError::OutOfGrid(key));
                }
                Ok(base
                    + if key.period == 0 {
                        n
                    } else {
                        n + 1 + (key.period - 1) * (5 * n + 1) + 5 * n
                    })
            }
            (_, None) => Err(ModelError::BadShape(key)),
            (kind, Some(r)) => {
                if r >= n || key.period > self.periods {
                    return Err(ModelError::OutOfGrid(key));
                }
                if key.period == 0 {
                    return if kind == VarKind::Y {
                        Ok(base + r)
                    } else {
                        Err(ModelError::OutOfGrid(key))
                    };
                }
                let slot = match kind {
                    VarKind::X => 0,
                    VarKind::Z => 1,
                    VarKind::Y => 2,
                    VarKind::E => 3,
                    VarKind::G => 4,
                    VarKind::S => unreachable!(),
                };
                Ok(base + n + 1 + (key.period - 1) * (5 * n + 1) + 5 * r + slot)
            }
        }
    }

    /// Inverse of [`lookup`](Self::lookup).
    pub fn key_of(&self, column: usize) -> Result<VariableKey, ModelError> {
        if column >= self.num_columns() {
            return Err(ModelError::BadColumn(column));
        }
        let n = self.n();
        let scenario = self.scenarios[column / self.block_len()];
        let off = column % self.block_len();
        if off < n {
            return Ok(VariableKey::new(VarKind::Y, off, 0, scenario));
        }
        if off == n {
            return Ok(VariableKey::central(0, scenario));
        }
        let rest = off - n - 1;
        let period = rest / (5 * n + 1) + 1;
        let within = rest % (5 * n + 1);
        if within == 5 * n {
            return Ok(VariableKey::central(period, scenario));
        }
        let kind = [VarKind::X, VarKind::Z, VarKind::Y, VarKind::E, VarKind::G][within % 5];
        Ok(VariableKey::new(kind, within / 5, period, scenario))
    }

    /// Token encoding a key, e.g. `x_NY_5_3`; parseable by [`decode_name`].
    pub fn name_of(&self, key: VariableKey) -> String {
        match key.region {
            Some(r) => format!(
                "{}_{}_{}_{}",
                key.kind.letter(),
                escape_id(&self.regions[r]),
                key.period,
                key.scenario
            ),
            None => format!("{}_{}_{}", key.kind.letter(), key.period, key.scenario),
        }
    }

    pub fn row_name(&self, key: RowKey) -> String {
        match key.region {
            Some(r) => format!(
                "{}_{}_{}_{}",
                key.family.prefix(),
                escape_id(&self.regions[r]),
                key.period,
                key.scenario
            ),
            None => format!("{}_{}_{}", key.family.prefix(), key.period, key.scenario),
        }
    }

    /// Decodes a column name produced by [`name_of`](Self::name_of).
    pub fn decode_name(&self, name: &str) -> Result<VariableKey, ModelError> {
        let bad = || ModelError::BadName(name.to_owned());
        let parts: Vec<&str> = name.split('_').collect();
        let kind = VarKind::from_letter(parts[0]).ok_or_else(bad)?;
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad());
        let key = match (kind, parts.len()) {
            (VarKind::S, 3) => VariableKey::central(num(parts[1])?, num(parts[2])?),
            (VarKind::S, _) | (_, 3) => return Err(bad()),
            (_, 4) => {
                let id = unescape_id(parts[1]).ok_or_else(bad)?;
                let r = self.regions.iter().position(|x| *x == id).ok_or_else(bad)?;
                VariableKey::new(kind, r, num(parts[2])?, num(parts[3])?)
            }
            _ => return Err(bad()),
        };
        self.lookup(key).map_err(|_| bad())?;
        Ok(key)
    }

    pub fn decode_row_name(&self, name: &str) -> Result<RowKey, ModelError> {
        let bad = || ModelError::BadName(name.to_owned());
        let parts: Vec<&str> = name.split('_').collect();
        let family = ConstraintFamily::ALL
            .into_iter()
            .find(|f| f.prefix() == parts[0])
            .ok_or_else(bad)?;
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad());
        match (family.is_central(), parts.len()) {
            (true, 3) => Ok(RowKey {
                family,
                region: None,
                period: num(parts[1])?,
                scenario: num(parts[2])?,
            }),
            (false, 4) => {
                let id = unescape_id(parts[1]).ok_or_else(bad)?;
                let r = self.regions.iter().position(|x| *x == id).ok_or_else(bad)?;
                Ok(RowKey {
                    family,
                    region: Some(r),
                    period: num(parts[2])?,
                    scenario: num(parts[3])?,
                })
            }
            _ => Err(bad()),
        }
    }
}

/// Keeps ASCII alphanumerics, writes every other byte as `.HH`.
pub fn escape_id(id: &str) -> String {
    let mut out = String::with_capacity(id.len());
    for b in id.bytes() {
        if b.is_ascii_alphanumeric() {
            out.push(b as char);
        } else {
            out.push_str(&format!(".{b:02X}"));
        }
    }
    out
}

pub fn unescape_id(token: &str) -> Option<String> {
    let bytes = token.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'.' {
            let hex = token.get(i + 1..i + 3)?;
            out.push(u8::from_str_radix(hex, 16).ok()?);
            i += 3;
        } else if bytes[i].is_ascii_alphanumeric() {
            out.push(bytes[i]);
            i += 1;
        } else {
            return None;
        }
    }
    String::from_utf8(out).ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
    pub binary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * values[j]).sum()
    }
}

/// Column and row keys of a model built from a planning instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Directory {
    pub grid: VariableGrid,
    pub row_keys: Vec<RowKey>,
}

/// Sparse mixed-binary linear program, minimization.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MilpModel {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
    #[serde(default)]
    pub directory: Option<Directory>,
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn add_column(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64, binary: bool) -> usize {
        self.columns.push(Column {
            name: name.into(),
            lower,
            upper,
            cost,
            binary,
        });
        self.columns.len() - 1
    }

    pub fn add_row(&mut self, name: impl Into<String>, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        self.rows.push(Row {
            name: name.into(),
            terms,
            sense,
            rhs: rhs + 0.0,
        });
        self.rows.len() - 1
    }

    pub fn num_binaries(&self) -> usize {
        self.columns.iter().filter(|c| c.binary).count()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.columns.iter().zip(values).map(|(c, v)| c.cost * v).sum()
    }

    /// Every row references only existing columns.
    pub fn is_well_formed(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.terms.iter().all(|&(j, a)| j < self.columns.len() && a.is_finite()) && r.rhs.is_finite())
    }

    /// Copy with binaries fixed at the given values.
    pub fn with_fixed_binaries(&self, values: &[f64]) -> Self {
        let mut m = self.clone();
        for (c, &v) in m.columns.iter_mut().zip(values) {
            if c.binary {
                let v = v.round();
                c.lower = v;
                c.upper = v;
            }
        }
        m
    }

    /// Column-value lookup by key; requires a directory.
    pub fn value(&self, values: &[f64], key: VariableKey) -> Result<f64, ModelError> {
        let dir = self
            .directory
            .as_ref()
            .ok_or_else(|| ModelError::Mismatch("model has no variable directory".into()))?;
        Ok(values[dir.grid.lookup(key)?])
    }
}

/// How the indicator constraints choose their big-M constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BigMRule {
    /// `I + tau_n y_{n,0} + sum_{t' <= t} Q_t'`. Can be too small
    /// to switch off the safety rows when the safety stock exceeds it.
    Tight,
    /// `max(sum_m y_{m,0} + I + sum_{t' <= t} Q_t', (1-tau_n) y_{n,0} + rho_n d_{n,t})`,
    /// large enough for every row it appears in.
    #[default]
    Safe,
}

/// `I + tau_n (1 - gamma_n) Y_n + sum_{t' <= t} Q_t'`.
pub fn compute_big_m(instance: &PlanningInstance, n: usize, t: usize) -> f64 {
    let y0 = instance.usable_inventory()[n];
    instance.central_initial as f64
        + instance.tau[n] * y0
        + cumulative_production(&instance.production, t).expect("period within horizon")
}

/// Safety stock `(1 - tau_n) y_{n,0} + rho_n d`.
pub fn safety_threshold(instance: &PlanningInstance, n: usize, demand: f64) -> f64 {
    (1.0 - instance.tau[n]) * instance.usable_inventory()[n] + instance.rho[n] * demand
}

/// Cells where the tight big-M does not deactivate the safety rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BigMShortfall {
    pub region: usize,
    pub period: usize,
    pub scenario: usize,
    pub big_m: f64,
    pub safety_stock: f64,
}

pub fn audit_big_m(instance: &PlanningInstance, scenarios: &ScenarioSet) -> Vec<BigMShortfall> {
    let mut out = Vec::new();
    for (w, sc) in scenarios.scenarios.iter().enumerate() {
        for n in 0..instance.num_regions() {
            for t in 1..=instance.num_periods() {
                let m = compute_big_m(instance, n, t);
                let c = safety_threshold(instance, n, sc.demand[n][t - 1]);
                if c > m + 1e-9 {
                    out.push(BigMShortfall {
                        region: n,
                        period: t,
                        scenario: w,
                        big_m: m,
                        safety_stock: c,
                    });
                }
            }
        }
    }
    out
}

fn check_compatible(instance: &PlanningInstance, scenarios: &ScenarioSet) -> Result<(), ModelError> {
    let ids: Vec<&str> = instance.regions.iter().map(|r| r.id.as_str()).collect();
    let set_ids: Vec<&str> = scenarios.regions.iter().map(String::as_str).collect();
    if ids != set_ids {
        return Err(ModelError::Mismatch(format!(
            "instance has {} regions {:?}, scenarios cover {} regions {:?}",
            ids.len(),
            ids,
            set_ids.len(),
            set_ids
        )));
    }
    if scenarios.horizon.num_periods != instance.num_periods() {
        return Err(ModelError::Mismatch(format!(
            "instance horizon has {} periods, scenarios {}",
            instance.num_periods(),
            scenarios.horizon.num_periods
        )));
    }
    for (w, s) in scenarios.scenarios.iter().enumerate() {
        if s.demand.len() != ids.len() || s.demand.iter().any(|d| d.len() != instance.num_periods()) {
            return Err(ModelError::Mismatch(format!("scenario {w} demand matrix has the wrong shape")));
        }
    }
    if scenarios.probabilities.len() != scenarios.scenarios.len() {
        return Err(ModelError::Mismatch("probability count differs from scenario count".into()));
    }
    Ok(())
}

/// Every scenario of the set in one program weighted by its probability.
pub fn build_extensive_form(
    instance: &PlanningInstance,
    scenarios: &ScenarioSet,
    rule: BigMRule,
) -> Result<MilpModel, ModelError> {
    check_compatible(instance, scenarios)?;
    let which: Vec<(usize, f64)> = scenarios.probabilities.iter().copied().enumerate().collect();
    Ok(build(instance, scenarios, &which, rule, "extensive_form".into()))
}

/// The rows and columns of one scenario, objective `sum e`.
pub fn single_scenario_model(
    instance: &PlanningInstance,
    scenarios: &ScenarioSet,
    scenario: usize,
    rule: BigMRule,
) -> Result<MilpModel, ModelError> {
    check_compatible(instance, scenarios)?;
    if scenario >= scenarios.len() {
        return Err(ModelError::Mismatch(format!(
            "scenario {scenario} requested from a set of {}",
            scenarios.len()
        )));
    }
    Ok(build(instance, scenarios, &[(scenario, 1.0)], rule, format!("scenario_{scenario}")))
}

fn build(
    instance: &PlanningInstance,
    set: &ScenarioSet,
    which: &[(usize, f64)],
    rule: BigMRule,
    name: String,
) -> MilpModel {
    let n_reg = instance.num_regions();
    let periods = instance.num_periods();
    let grid = VariableGrid::new(
        instance.regions.iter().map(|r| r.id.clone()).collect(),
        periods,
        which.iter().map(|&(w, _)| w).collect(),
    );
    let y0 = instance.usable_inventory();

    let mut model = MilpModel::new(name);
    for j in 0..grid.num_columns() {
        let key = grid.key_of(j).expect("column in grid");
        let binary = key.kind == VarKind::G;
        let cost = if key.kind == VarKind::E {
            which[grid.scenario_position(key.scenario).unwrap()].1
        } else {
            0.0
        };
        model.add_column(grid.name_of(key), 0.0, if binary { 1.0 } else { f64::INFINITY }, cost, binary);
    }

    let mut row_keys = Vec::new();
    let mut push = |model: &mut MilpModel, key: RowKey, terms: Vec<(usize, f64)>, sense, rhs| {
        model.add_row(grid.row_name(key), terms, sense, rhs);
        row_keys.push(key);
    };
    let col = |k: VariableKey| grid.lookup(k).expect("key in grid");

    for &(w, _) in which {
        let demand = &set.scenarios[w].demand;
        let key = |family, region, period| RowKey {
            family,
            region,
            period,
            scenario: w,
        };
        for (n, &y) in y0.iter().enumerate() {
            push(
                &mut model,
                key(ConstraintFamily::InitialRegion, Some(n), 0),
                vec![(col(VariableKey::new(VarKind::Y, n, 0, w)), 1.0)],
                Sense::Eq,
                y,
            );
        }
        push(
            &mut model,
            key(ConstraintFamily::InitialCentral, None, 0),
            vec![(col(VariableKey::central(0, w)), 1.0)],
            Sense::Eq,
            instance.central_initial as f64,
        );

        for t in 1..=periods {
            let q = instance.production[t - 1] as f64;
            let s_prev = col(VariableKey::central(t - 1, w));
            let s_now = col(VariableKey::central(t, w));
            let xs: Vec<usize> = (0..n_reg).map(|n| col(VariableKey::new(VarKind::X, n, t, w))).collect();
            let zs: Vec<usize> = (0..n_reg).map(|n| col(VariableKey::new(VarKind::Z, n, t, w))).collect();

            for n in 0..n_reg {
                let x = xs[n];
                let z = zs[n];
                let y = col(VariableKey::new(VarKind::Y, n, t, w));
                let y_prev = col(VariableKey::new(VarKind::Y, n, t - 1, w));
                let y_init = col(VariableKey::new(VarKind::Y, n, 0, w));
                let e = col(VariableKey::new(VarKind::E, n, t, w));
                let g = col(VariableKey::new(VarKind::G, n, t, w));
                let d = demand[n][t - 1];
                let keep = 1.0 - instance.tau[n];
                let rho_d = instance.rho[n] * d;
                let m = match rule {
                    BigMRule::Tight => compute_big_m(instance, n, t),
                    BigMRule::Safe => instance.system_units(t).max(safety_threshold(instance, n, d)),
                };

                // y_{n,0} appears in its own row when t = 1
                let mut balance = vec![(y_prev, 1.0), (x, 1.0), (z, -1.0), (y, -1.0)];
                merge_terms(&mut balance);
                push(&mut model, key(ConstraintFamily::RegionBalance, Some(n), t), balance, Sense::Eq, 0.0);

                let mut activation = vec![(y, 1.0), (y_init, -keep), (g, -m)];
                merge_terms(&mut activation);
                push(
                    &mut model,
                    key(ConstraintFamily::SafetyActivation, Some(n), t),
                    activation,
                    Sense::Ge,
                    rho_d - m,
                );

                let mut cap = vec![(z, 1.0), (y, -1.0), (y_init, keep), (g, m)];
                merge_terms(&mut cap);
                push(&mut model, key(ConstraintFamily::SafetyCap, Some(n), t), cap, Sense::Le, m - rho_d);

                push(
                    &mut model,
                    key(ConstraintFamily::SafetySwitch, Some(n), t),
                    vec![(z, 1.0), (g, -m)],
                    Sense::Le,
                    0.0,
                );
                push(
                    &mut model,
                    key(ConstraintFamily::Shortage, Some(n), t),
                    vec![(e, 1.0), (y, 1.0)],
                    Sense::Ge,
                    d,
                );
            }

            let mut central = vec![(s_prev, 1.0)];
            central.extend(zs.iter().map(|&z| (z, 1.0)));
            central.extend(xs.iter().map(|&x| (x, -1.0)));
            central.push((s_now, -1.0));
            push(&mut model, key(ConstraintFamily::CentralBalance, None, t), central, Sense::Eq, -q);

            let mut outflow: Vec<(usize, f64)> = xs.iter().map(|&x| (x, 1.0)).collect();
            outflow.push((s_prev, -1.0));
            outflow.extend(zs.iter().map(|&z| (z, -1.0)));
            push(&mut model, key(ConstraintFamily::CentralOutflow, None, t), outflow, Sense::Le, q);
        }
    }
    model.directory = Some(Directory { grid, row_keys });
    model
}

/// Sums duplicate column entries and drops zeros.
fn merge_terms(terms: &mut Vec<(usize, f64)>) {
    terms.sort_by_key(|&(j, _)| j);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
    for &(j, a) in terms.iter() {
        match out.last_mut() {
            Some((k, b)) if *k == j => *b += a,
            _ => out.push((j, a)),
        }
    }
    out.retain(|&(_, a)| a != 0.0);
    *terms = out;
}

/// Decision values of one scenario, indexed `[n][t]`; flows and shortages
/// have `T` entries (periods `1..=T`), stocks have `T + 1` (periods `0..=T`).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScenarioPlan {
    pub x: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub s: Vec<f64>,
    pub e: Vec<Vec<f64>>,
    pub g: Vec<Vec<f64>>,
}

impl ScenarioPlan {
    /// Pulls scenario `label` out of a full column-value vector.
    pub fn extract(grid: &VariableGrid, values: &[f64], label: usize) -> Result<Self, ModelError> {
        let n_reg = grid.regions.len();
        let periods = grid.periods;
        let get = |k: VariableKey| grid.lookup(k).map(|j| values[j]);
        let per_region = |kind: VarKind, from: usize| -> Result<Vec<Vec<f64>>, ModelError> {
            (0..n_reg)
                .map(|n| (from..=periods).map(|t| get(VariableKey::new(kind, n, t, label))).collect())
                .collect()
        };
        Ok(Self {
            x: per_region(VarKind::X, 1)?,
            z: per_region(VarKind::Z, 1)?,
            y: per_region(VarKind::Y, 0)?,
            s: (0..=periods)
                .map(|t| get(VariableKey::central(t, label)))
                .collect::<Result<_, _>>()?,
            e: per_region(VarKind::E, 1)?,
            g: per_region(VarKind::G, 1)?,
        })
    }

    pub fn total_shortage(&self) -> f64 {
        self.e.iter().flatten().sum()
    }
}
