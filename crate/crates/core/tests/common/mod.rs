//! Shared helpers for the integration tests: instance builders, an
//! independent shortage oracle and plan checks.

#![allow(dead_code)]

use chrono::NaiveDate;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use ventplan::instance::{Horizon, PlanningInstance, Region};
use ventplan::model::ScenarioPlan;
use ventplan::scenario::ScenarioSet;

pub fn instance(y: &[u64], central: u64, q: &[u64], gamma: f64, tau: f64, rho: f64) -> PlanningInstance {
    let n = y.len();
    PlanningInstance {
        schema_version: 1,
        regions: (0..n).map(|i| Region::new(format!("R{i}"))).collect(),
        horizon: Horizon::new(NaiveDate::from_ymd_opt(2020, 3, 23).unwrap(), q.len()),
        initial_region_inventory: y.to_vec(),
        central_initial: central,
        production: q.to_vec(),
        gamma: vec![gamma; n],
        tau: vec![tau; n],
        rho: vec![rho; n],
    }
}

/// `demands[w][n][t - 1]` with the given raw weights.
pub fn scenarios(inst: &PlanningInstance, demands: Vec<Vec<Vec<f64>>>, weights: &[f64]) -> ScenarioSet {
    ScenarioSet::from_demands(
        inst.regions.iter().map(|r| r.id.clone()).collect(),
        inst.horizon,
        demands,
        weights,
    )
    .unwrap()
}

pub fn equal_weights(inst: &PlanningInstance, demands: Vec<Vec<Vec<f64>>>) -> ScenarioSet {
    let w = vec![1.0; demands.len()];
    scenarios(inst, demands, &w)
}

/// Minimum total shortage of one scenario, by dynamic programming over
/// regional inventory levels on a uniform grid of step `h`.
///
/// A level sequence is reachable when every period keeps the regional total
/// within the units the system owns, and a region that gives units back ends
/// the period at least halfway between its previous level and its safety
/// stock. Raising a level needs no binary; lowering one needs the region to
/// be above its safety stock beforehand. Handles one or two regions.
pub fn oracle_scenario_shortage(inst: &PlanningInstance, demand: &[Vec<f64>], h: f64) -> f64 {
    let n = inst.regions.len();
    assert!(n == 1 || n == 2, "oracle handles one or two regions");
    let periods = inst.horizon.num_periods;
    let y0: Vec<f64> = (0..n)
        .map(|r| (1.0 - inst.gamma[r]) * inst.initial_region_inventory[r] as f64)
        .collect();
    let mut total = y0.iter().sum::<f64>() + inst.central_initial as f64;
    let idx = |v: f64| -> usize {
        let i = (v / h).round();
        assert!((i * h - v).abs() < 1e-9, "value {v} is off the grid {h}");
        i as usize
    };

    // value function over (a, b) grid indices; region b is a phantom when n == 1
    let mut size = idx(total) + 1;
    let mut value = vec![f64::INFINITY; size * size];
    let (a0, b0) = (idx(y0[0]), if n == 2 { idx(y0[1]) } else { 0 });
    value[a0 * size + b0] = 0.0;

    for t in 1..=periods {
        total += inst.production[t - 1] as f64;
        let next_size = idx(total) + 1;
        let threshold = |r: usize| -> f64 {
            if r < n {
                (1.0 - inst.tau[r]) * y0[r] + inst.rho[r] * demand[r][t - 1]
            } else {
                0.0
            }
        };
        let floor = |level: f64, c: f64| -> f64 {
            if level >= c {
                (level + c) / 2.0
            } else {
                level
            }
        };
        // reach[r][j]: largest previous index whose floor is at most level j
        let reach = |r: usize| -> Vec<Option<usize>> {
            let c = threshold(r);
            let mut out = vec![None; next_size];
            let mut i = 0usize;
            let mut best: Option<usize> = None;
            for (j, slot) in out.iter_mut().enumerate() {
                while i < size && floor(i as f64 * h, c) <= j as f64 * h + 1e-12 {
                    best = Some(i);
                    i += 1;
                }
                *slot = best;
            }
            out
        };
        let (reach_a, reach_b) = (reach(0), reach(1));

        // prefix minima over the previous value function
        let mut prefix = value.clone();
        for a in 0..size {
            for b in 0..size {
                let mut m = prefix[a * size + b];
                if a > 0 {
                    m = m.min(prefix[(a - 1) * size + b]);
                }
                if b > 0 {
                    m = m.min(prefix[a * size + b - 1]);
                }
                prefix[a * size + b] = m;
            }
        }

        let mut next = vec![f64::INFINITY; next_size * next_size];
        for a in 0..next_size {
            let Some(pa) = reach_a[a] else { continue };
            let short_a = (demand[0][t - 1] - a as f64 * h).max(0.0);
            for b in 0..next_size - a {
                if n == 1 && b > 0 {
                    break;
                }
                let Some(pb) = reach_b[b] else { continue };
                let prev = prefix[pa * size + pb];
                if prev.is_finite() {
                    let short_b = if n == 2 { (demand[1][t - 1] - b as f64 * h).max(0.0) } else { 0.0 };
                    next[a * next_size + b] = prev + short_a + short_b;
                }
            }
        }
        value = next;
        size = next_size;
    }
    value.into_iter().fold(f64::INFINITY, f64::min)
}

/// Grid fine enough for the instances drawn by [`random_small_case`].
pub fn oracle_grid(periods: usize) -> f64 {
    1.0 / f64::powi(2.0, periods as i32 + 2)
}

/// Probability-weighted oracle optimum of a whole scenario set.
pub fn oracle_expected_shortage(inst: &PlanningInstance, set: &ScenarioSet) -> f64 {
    let h = oracle_grid(inst.horizon.num_periods);
    set.scenarios
        .iter()
        .zip(&set.probabilities)
        .map(|(s, p)| p * oracle_scenario_shortage(inst, &s.demand, h))
        .sum()
}

/// Small instance with integer data: up to `max_regions` regions, 1 to
/// `max_periods` periods and 1 to `max_scenarios` scenarios, demands at most 10.
pub fn random_small_case(
    rng: &mut ChaCha8Rng,
    max_regions: usize,
    max_periods: usize,
    min_scenarios: usize,
    max_scenarios: usize,
) -> (PlanningInstance, ScenarioSet) {
    let n = rng.random_range(1..=max_regions);
    let periods = rng.random_range(1..=max_periods);
    let gamma = [0.0, 0.5][rng.random_range(0..2)];
    let y: Vec<u64> = (0..n)
        .map(|_| {
            let v = rng.random_range(0..=6u64);
            if gamma > 0.0 {
                v & !1
            } else {
                v
            }
        })
        .collect();
    let central = rng.random_range(0..=4u64);
    let q: Vec<u64> = (0..periods).map(|_| rng.random_range(0..=3u64)).collect();
    let tau = [0.0, 0.5, 1.0][rng.random_range(0..3)];
    let rho = [0.0, 0.5, 1.0][rng.random_range(0..3)];
    let mut inst = instance(&y, central, &q, gamma, tau, rho);
    // per-region parameters may differ
    for r in 0..n {
        if rng.random_bool(0.3) {
            inst.tau[r] = [0.0, 0.5, 1.0][rng.random_range(0..3)];
        }
    }
    let count = rng.random_range(min_scenarios..=max_scenarios);
    let demands: Vec<Vec<Vec<f64>>> = (0..count)
        .map(|_| {
            (0..n)
                .map(|_| (0..periods).map(|_| rng.random_range(0..=10u32) as f64).collect())
                .collect()
        })
        .collect();
    let weights: Vec<f64> = (0..count).map(|_| rng.random_range(1..=3u32) as f64).collect();
    let set = scenarios(&inst, demands, &weights);
    (inst, set)
}

/// Largest violation of `sum_n y + s = sum_n y_0 + I + cumulative Q` over
/// all periods of a plan.
pub fn conservation_error(inst: &PlanningInstance, plan: &ScenarioPlan) -> f64 {
    let usable = inst.usable_inventory();
    let mut owned = usable.iter().sum::<f64>() + inst.central_initial as f64;
    let mut worst: f64 = 0.0;
    for t in 0..=inst.horizon.num_periods {
        if t > 0 {
            owned += inst.production[t - 1] as f64;
        }
        let held: f64 = plan.y.iter().map(|row| row[t]).sum::<f64>() + plan.s[t];
        worst = worst.max((held - owned).abs());
    }
    worst
}
