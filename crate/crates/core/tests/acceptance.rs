//! Acceptance suite. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; exits nonzero if a gating criterion fails.

mod common;

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{conservation_error, instance, oracle_expected_shortage, random_small_case, scenarios};
use ventplan::instance::{Horizon, PlanningInstance};
use ventplan::model::{build_extensive_form, BigMRule};
use ventplan::orchestrator::ParameterOverrides;
use ventplan::scenario::{generate_scenarios, CaseSpec, ForecastRecord, ForecastSeries, ScenarioSet, Tail};
use ventplan::solver::{branch_and_bound, solve_plan, PlanSolution, SolveLimits, SolveStatus, Strategy};

const ORACLE_TOL: f64 = 1e-6;
const SEPARABILITY_TOL: f64 = 1e-6;
const CONSERVATION_TOL: f64 = 1e-6;
const ZERO_TOL: f64 = 1e-9;
const MONOTONE_TOL: f64 = 1e-6;
const TAIL_TARGET: f64 = 0.75;
const TAIL_TOL: f64 = 0.013;

struct Outcome {
    name: &'static str,
    gating: bool,
    passed: bool,
    detail: String,
}

#[derive(Default)]
struct Conservation {
    plans: usize,
    worst: f64,
}

impl Conservation {
    fn record(&mut self, inst: &PlanningInstance, solution: &PlanSolution) {
        for plan in solution.outcomes.iter().filter_map(|o| o.plan.as_ref()) {
            self.plans += 1;
            self.worst = self.worst.max(conservation_error(inst, plan));
        }
    }
}

fn limits() -> SolveLimits {
    SolveLimits::default()
}

fn oracle_equivalence(cons: &mut Conservation) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2020);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    let count = 200;
    for _ in 0..count {
        let (inst, set) = random_small_case(&mut rng, 2, 3, 1, 2);
        let model = build_extensive_form(&inst, &set, BigMRule::Safe).unwrap();
        let r = branch_and_bound(&model, &limits()).unwrap();
        let expected = oracle_expected_shortage(&inst, &set);
        let diff = (r.objective - expected).abs();
        worst = worst.max(diff);
        if r.status != SolveStatus::Optimal || diff > ORACLE_TOL {
            failures += 1;
        }
        let plan = solve_plan(&inst, &set, Strategy::Monolithic, BigMRule::Safe, &limits()).unwrap();
        cons.record(&inst, &plan);
    }
    Outcome {
        name: "oracle equivalence",
        gating: true,
        passed: failures == 0,
        detail: format!(
            "{count} instances, {failures} mismatches, max |diff| {worst:.2e} (tol {ORACLE_TOL:e}), {:.1}s",
            start.elapsed().as_secs_f64()
        ),
    }
}

fn separability(cons: &mut Conservation) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    let count = 50;
    for i in 0..count {
        let omega = 2 + i % 3;
        let (inst, set) = random_small_case(&mut rng, 2, 3, omega, omega);
        let mono = solve_plan(&inst, &set, Strategy::Monolithic, BigMRule::Safe, &limits()).unwrap();
        let split = solve_plan(&inst, &set, Strategy::PerScenario, BigMRule::Safe, &limits()).unwrap();
        let weighted: f64 = split.outcomes.iter().map(|o| o.probability * o.objective).sum();
        let diff = (mono.objective - weighted).abs();
        worst = worst.max(diff);
        if mono.status != SolveStatus::Optimal || split.status != SolveStatus::Optimal || diff > SEPARABILITY_TOL {
            failures += 1;
        }
        cons.record(&inst, &mono);
        cons.record(&inst, &split);
    }
    Outcome {
        name: "separability",
        gating: true,
        passed: failures == 0,
        detail: format!("{count} instances with 2 to 4 scenarios, {failures} mismatches, max |diff| {worst:.2e} (tol {SEPARABILITY_TOL:e})"),
    }
}

fn grid_fixture() -> (PlanningInstance, ScenarioSet) {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let inst = PlanningInstance::load(dir.join("grid_instance.json")).unwrap();
    let set = ScenarioSet::load(dir.join("grid_scenarios.json")).unwrap();
    (inst, set)
}

fn monotonicity(cons: &mut Conservation) -> Outcome {
    let (base, set) = grid_fixture();
    let taus = [0.0, 0.25, 0.5];
    let stocks = [0u64, 5, 10];
    let gammas = [0.5, 0.6, 0.75];
    // total[g][t][i]
    let mut total = [[[0.0f64; 3]; 3]; 3];
    for (g, &gamma) in gammas.iter().enumerate() {
        for (t, &tau) in taus.iter().enumerate() {
            for (i, &stock) in stocks.iter().enumerate() {
                let inst = ParameterOverrides {
                    gamma: Some(gamma),
                    tau: Some(tau),
                    rho: None,
                    central_initial: Some(stock),
                }
                .apply(base.clone());
                let sol = solve_plan(&inst, &set, Strategy::PerScenario, BigMRule::Safe, &limits()).unwrap();
                assert_eq!(sol.status, SolveStatus::Optimal);
                cons.record(&inst, &sol);
                total[g][t][i] = sol.objective;
            }
        }
    }
    let mut violations = Vec::new();
    for a in 0..3 {
        for b in 0..3 {
            for k in 1..3 {
                if total[a][k][b] > total[a][k - 1][b] + MONOTONE_TOL {
                    violations.push(format!("tau up at gamma={} I={}", gammas[a], stocks[b]));
                }
                if total[a][b][k] > total[a][b][k - 1] + MONOTONE_TOL {
                    violations.push(format!("I up at gamma={} tau={}", gammas[a], taus[b]));
                }
                if total[k][a][b] < total[k - 1][a][b] - MONOTONE_TOL {
                    violations.push(format!("gamma up at tau={} I={}", taus[a], stocks[b]));
                }
            }
        }
    }
    let strict = total[0][0][0] > total[0][2][0] && total[0][0][0] > total[0][0][2] && total[2][0][0] > total[0][0][0];
    Outcome {
        name: "monotonicity grid",
        gating: true,
        passed: violations.is_empty() && strict,
        detail: format!(
            "27 runs, total at (gamma .5, tau 0, I 0) = {:.3}, (tau .5) = {:.3}, (I 10) = {:.3}, (gamma .75) = {:.3}{}",
            total[0][0][0],
            total[0][2][0],
            total[0][0][2],
            total[2][0][0],
            if violations.is_empty() { String::new() } else { format!("; violations: {violations:?}") }
        ),
    }
}

fn sufficient_supply(cons: &mut Conservation) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    let count = 60;
    for k in 0..count {
        let n = rng.random_range(1..=3usize);
        let periods = rng.random_range(1..=4usize);
        let omega = rng.random_range(1..=3usize);
        let demands: Vec<Vec<Vec<f64>>> = (0..omega)
            .map(|_| {
                (0..n)
                    .map(|_| (0..periods).map(|_| rng.random_range(0..=10u32) as f64).collect())
                    .collect()
            })
            .collect();
        let peak = |r: usize| -> u64 {
            demands
                .iter()
                .flat_map(|w| w[r].iter())
                .fold(0.0f64, |m, &d| m.max(d)) as u64
        };
        let q: Vec<u64> = (0..periods).map(|_| rng.random_range(0..=2u64)).collect();
        let inst = if k % 2 == 0 {
            // supply held centrally
            let central: u64 = (0..n).map(peak).sum::<u64>() + rng.random_range(0..=3u64);
            let y: Vec<u64> = (0..n).map(|_| rng.random_range(0..=5u64)).collect();
            instance(&y, central, &q, 0.0, 1.0, 0.0)
        } else {
            // every region already holds its own peak
            let y: Vec<u64> = (0..n).map(|r| peak(r) + rng.random_range(0..=2u64)).collect();
            instance(&y, rng.random_range(0..=3u64), &q, 0.0, 1.0, 0.0)
        };
        let weights: Vec<f64> = (0..omega).map(|_| 1.0).collect();
        let set = scenarios(&inst, demands, &weights);
        let sol = solve_plan(&inst, &set, Strategy::PerScenario, BigMRule::Safe, &limits()).unwrap();
        cons.record(&inst, &sol);
        worst = worst.max(sol.objective.abs());
    }
    Outcome {
        name: "sufficient-supply zero",
        gating: true,
        passed: worst <= ZERO_TOL,
        detail: format!("{count} instances with tau=1, rho=0, max objective {worst:.2e} (tol {ZERO_TOL:e})"),
    }
}

fn pooled_supply_counterexample() -> Outcome {
    let inst = instance(&[4, 0], 0, &[0, 0], 0.0, 1.0, 0.0);
    let set = scenarios(&inst, vec![vec![vec![0.0, 0.0], vec![4.0, 4.0]]], &[1.0]);
    let sol = solve_plan(&inst, &set, Strategy::PerScenario, BigMRule::Safe, &limits()).unwrap();
    Outcome {
        name: "pooled supply held in another region",
        gating: false,
        passed: (sol.objective - oracle_expected_shortage(&inst, &set)).abs() <= ORACLE_TOL,
        detail: format!(
            "y0=(4,0), d=(0,4) over 2 days: optimum {:.3}, not 0; transfers release at most half a region's surplus per day",
            sol.objective
        ),
    }
}

fn scenario_statistics() -> Outcome {
    let start = NaiveDate::from_ymd_opt(2020, 4, 1).unwrap();
    let horizon = Horizon::new(start, 6);
    let series: Vec<ForecastSeries> = ["NY", "NJ", "CT"]
        .iter()
        .enumerate()
        .map(|(r, region)| ForecastSeries {
            region: region.to_string(),
            records: (1..=6)
                .map(|t| {
                    let mean = 100.0 * (r + 1) as f64 + 10.0 * t as f64;
                    ForecastRecord {
                        date: horizon.date_of(t),
                        mean,
                        lower: mean - 20.0 - t as f64,
                        upper: mean + 35.0 + 2.0 * t as f64,
                    }
                })
                .collect(),
        })
        .collect();
    let case = CaseSpec {
        label: None,
        right_tail_prob: TAIL_TARGET,
        right_tail_weight: 1.0,
        left_tail_weight: 1.0,
        partitions: 50,
        scenario_count: 10_000,
    };
    let set = generate_scenarios(&series, &horizon, &case, 12_345).unwrap();
    let right = set.scenarios.iter().filter(|s| s.tail == Tail::Right).count();
    let fraction = right as f64 / set.len() as f64;
    let mut outside = 0usize;
    for s in &set.scenarios {
        for (r, row) in s.demand.iter().enumerate() {
            for (t, &d) in row.iter().enumerate() {
                let rec = &series[r].records[t];
                let (lo, hi) = match s.tail {
                    Tail::Right => (rec.mean, rec.upper),
                    Tail::Left => (rec.lower, rec.mean),
                };
                if !(lo..=hi).contains(&d) {
                    outside += 1;
                }
            }
        }
    }
    Outcome {
        name: "scenario statistics",
        gating: true,
        passed: (fraction - TAIL_TARGET).abs() <= TAIL_TOL && outside == 0 && set.len() == 10_000,
        detail: format!(
            "10000 draws, right-tail fraction {fraction:.4} (target {TAIL_TARGET} +/- {TAIL_TOL}), {outside} demands outside their interval"
        ),
    }
}

fn conservation(cons: &Conservation) -> Outcome {
    Outcome {
        name: "conservation",
        gating: true,
        passed: cons.plans > 0 && cons.worst <= CONSERVATION_TOL,
        detail: format!(
            "{} incumbent plans from the runs above, max violation {:.2e} (tol {CONSERVATION_TOL:e})",
            cons.plans, cons.worst
        ),
    }
}

fn full_scale() -> Outcome {
    Outcome {
        name: "full-scale replication",
        gating: false,
        passed: false,
        detail: "SKIPPED: needs a user-supplied national forecast snapshot and an external MILP solver; \
                 see `ventplan solve --export-model` and the external_solver example"
            .into(),
    }
}

fn main() -> ExitCode {
    let mut cons = Conservation::default();
    let outcomes = vec![
        oracle_equivalence(&mut cons),
        separability(&mut cons),
        monotonicity(&mut cons),
        sufficient_supply(&mut cons),
        pooled_supply_counterexample(),
        scenario_statistics(),
        conservation(&cons),
        full_scale(),
    ];
    let mut failed = 0;
    for o in &outcomes {
        let verdict = match (o.passed, o.gating) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "INFO",
        };
        let tag = if o.gating { "" } else { " [non-gating]" };
        println!("{verdict} {}{tag}: {}", o.name, o.detail);
        if o.gating && !o.passed {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} gating criteria passed, {failed} failed",
        outcomes.iter().filter(|o| o.gating && o.passed).count()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
