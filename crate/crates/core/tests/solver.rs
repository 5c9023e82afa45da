mod common;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ventplan::model::{
    build_extensive_form, single_scenario_model, BigMRule, ConstraintFamily, MilpModel, VarKind, VariableGrid,
    VariableKey,
};
use ventplan::solver::io::{export_model, import_model, parse_solution, same_model_up_to_row_order, write_solution, ModelFormat};
use ventplan::solver::{
    branch_and_bound, check_feasibility, solve_lp_relaxation, SolveLimits, SolveResult, SolveStatus, ViolationTarget,
};

fn optimum(model: &MilpModel) -> SolveResult {
    let r = branch_and_bound(model, &SolveLimits::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    r
}

fn two_region_one_period() -> MilpModel {
    let inst = instance(&[5, 0], 2, &[0], 0.0, 0.0, 0.0);
    let set = equal_weights(&inst, vec![vec![vec![8.0], vec![3.0]]]);
    build_extensive_form(&inst, &set, BigMRule::Safe).unwrap()
}

#[test]
fn relaxation_examples() {
    let r = solve_lp_relaxation(&two_region_one_period()).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    assert!((r.objective - 4.0).abs() < 1e-7);

    let inst = instance(&[3, 1], 1, &[1, 2], 0.5, 0.5, 0.0);
    let set = equal_weights(&inst, vec![vec![vec![0.0; 2]; 2]]);
    let r = solve_lp_relaxation(&build_extensive_form(&inst, &set, BigMRule::Safe).unwrap()).unwrap();
    assert_eq!(r.objective, 0.0);

    let mut crossed = two_region_one_period();
    crossed.columns[0].lower = 3.0;
    crossed.columns[0].upper = 1.0;
    assert_eq!(solve_lp_relaxation(&crossed).unwrap().status, SolveStatus::Infeasible);
}

#[test]
fn branch_and_bound_examples() {
    let inst = instance(&[5], 0, &[0], 0.0, 0.0, 0.0);
    let set = equal_weights(&inst, vec![vec![vec![8.0]]]);
    let r = optimum(&build_extensive_form(&inst, &set, BigMRule::Safe).unwrap());
    assert!((r.objective - 3.0).abs() < 1e-9);
    assert!(r.best_bound <= r.objective + 1e-9);
}

#[test]
fn feasibility_report_names_rows_and_keys() {
    let model = two_region_one_period();
    let r = optimum(&model);
    let values = r.incumbent.clone().unwrap();
    assert!(check_feasibility(&model, &values, 1e-6).is_empty());

    let grid = &model.directory.as_ref().unwrap().grid;
    let mut broken = values.clone();
    broken[grid.lookup(VariableKey::new(VarKind::Y, 1, 1, 0)).unwrap()] += 1.0;
    let v = check_feasibility(&model, &broken, 1e-6);
    assert_eq!(v.len(), 1, "{v:?}");
    match &v[0].target {
        ViolationTarget::Row { family, key, .. } => {
            assert_eq!(*family, Some(ConstraintFamily::RegionBalance));
            let key = key.unwrap();
            assert_eq!((key.region, key.period, key.scenario), (Some(1), 1, 0));
        }
        other => panic!("unexpected target {other:?}"),
    }
    assert!((v[0].amount - 1.0).abs() < 1e-9);

    let mut switched_off = values;
    let z = grid.lookup(VariableKey::new(VarKind::Z, 0, 1, 0)).unwrap();
    let x = grid.lookup(VariableKey::new(VarKind::X, 0, 1, 0)).unwrap();
    let g = grid.lookup(VariableKey::new(VarKind::G, 0, 1, 0)).unwrap();
    switched_off[z] += 1.0;
    switched_off[x] += 1.0;
    switched_off[g] = 0.0;
    let v = check_feasibility(&model, &switched_off, 1e-6);
    assert!(v.iter().any(|v| matches!(
        v.target,
        ViolationTarget::Row {
            family: Some(ConstraintFamily::SafetySwitch),
            ..
        }
    )));
}

#[test]
fn one_binary_declared_for_the_smallest_grid() {
    let inst = instance(&[5], 0, &[0], 0.0, 0.0, 0.0);
    let set = equal_weights(&inst, vec![vec![vec![8.0]]]);
    let model = build_extensive_form(&inst, &set, BigMRule::Safe).unwrap();
    let lp = String::from_utf8(export_model(&model, ModelFormat::Lp)).unwrap();
    let binaries = lp.split("Binaries\n").nth(1).unwrap().split("End").next().unwrap();
    assert_eq!(binaries.split_whitespace().collect::<Vec<_>>(), vec!["g_R0_1_0"]);
    let mps = String::from_utf8(export_model(&model, ModelFormat::Mps)).unwrap();
    assert_eq!(mps.lines().filter(|l| l.trim_start().starts_with("BV ")).count(), 1);
}

#[test]
fn names_encode_keys() {
    let grid = VariableGrid::new(vec!["NY".into(), "New Jersey".into()], 6, vec![0, 1, 2, 3]);
    let key = VariableKey::new(VarKind::X, 0, 5, 3);
    let name = grid.name_of(key);
    assert_eq!(name, "x_NY_5_3");
    assert!(!name.contains(char::is_whitespace));
    assert_eq!(grid.decode_name(&name).unwrap(), key);
    let spaced = VariableKey::new(VarKind::G, 1, 2, 0);
    let token = grid.name_of(spaced);
    assert!(!token.contains(' '));
    assert_eq!(grid.decode_name(&token).unwrap(), spaced);
}

#[test]
fn external_solution_round_trip() {
    let model = two_region_one_period();
    let r = optimum(&model);
    let text = write_solution(&model, r.incumbent.as_ref().unwrap());
    let back = parse_solution(&model, &text).unwrap();
    assert_eq!(&back, r.incumbent.as_ref().unwrap());
    assert!(check_feasibility(&model, &back, 1e-9).is_empty());
    assert_eq!(model.objective_value(&back), r.objective);
}

#[test]
fn identical_inputs_give_identical_results() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let (inst, set) = random_small_case(&mut rng, 2, 3, 1, 2);
        let model = build_extensive_form(&inst, &set, BigMRule::Safe).unwrap();
        let mut a = optimum(&model);
        let mut b = optimum(&model);
        a.wall_time = 0.0;
        b.wall_time = 0.0;
        assert_eq!(a, b);
    }
}

#[test]
fn tight_big_m_can_cut_off_every_plan() {
    // no reserve and no production leave a zero big-M, so the safety rows bind
    let inst = instance(&[5], 0, &[0], 0.0, 0.0, 1.0);
    let set = equal_weights(&inst, vec![vec![vec![8.0]]]);
    let tight = build_extensive_form(&inst, &set, BigMRule::Tight).unwrap();
    assert_eq!(optimum_status(&tight), SolveStatus::Infeasible);
    assert!(!ventplan::model::audit_big_m(&inst, &set).is_empty());
    let safe = build_extensive_form(&inst, &set, BigMRule::Safe).unwrap();
    assert!((optimum(&safe).objective - 3.0).abs() < 1e-9);
}

fn optimum_status(model: &MilpModel) -> SolveStatus {
    branch_and_bound(model, &SolveLimits::default()).unwrap().status
}

fn small_case() -> impl Strategy<Value = u64> {
    any::<u64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn export_round_trips(seed in small_case()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (inst, set) = random_small_case(&mut rng, 2, 3, 1, 2);
        let model = build_extensive_form(&inst, &set, BigMRule::Safe).unwrap();
        for format in [ModelFormat::Lp, ModelFormat::Mps] {
            let back = import_model(&export_model(&model, format), format).unwrap();
            prop_assert!(same_model_up_to_row_order(&model, &back));
        }
    }

    #[test]
    fn optimal_plans_are_consistent(seed in small_case()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (inst, set) = random_small_case(&mut rng, 2, 3, 1, 2);
        let model = build_extensive_form(&inst, &set, BigMRule::Safe).unwrap();
        let r = optimum(&model);
        let values = r.incumbent.clone().unwrap();
        prop_assert!(check_feasibility(&model, &values, 1e-6).is_empty());

        // relaxation bounds the integer optimum
        let lp = solve_lp_relaxation(&model).unwrap();
        prop_assert!(lp.objective <= r.objective + 1e-7);

        // fixing the binaries leaves a pure LP with the same optimum
        let fixed = model.with_fixed_binaries(&values);
        let bb = branch_and_bound(&fixed, &SolveLimits::default()).unwrap();
        let relaxed = solve_lp_relaxation(&fixed).unwrap();
        prop_assert!((bb.objective - relaxed.objective).abs() < 1e-7);
        prop_assert!((bb.objective - r.objective).abs() < 1e-6);

        let grid = &model.directory.as_ref().unwrap().grid;
        for w in 0..set.len() {
            let plan = ventplan::model::ScenarioPlan::extract(grid, &values, w).unwrap();
            prop_assert!(conservation_error(&inst, &plan) < 1e-6);
            for n in 0..inst.regions.len() {
                let y0 = inst.usable_inventory()[n];
                for t in 1..=inst.horizon.num_periods {
                    let d = set.scenarios[w].demand[n][t - 1];
                    let y = plan.y[n][t];
                    prop_assert!((plan.e[n][t - 1] - (d - y).max(0.0)).abs() < 1e-6);
                    if plan.g[n][t - 1] < 0.5 {
                        prop_assert!(plan.z[n][t - 1] < 1e-6);
                    } else {
                        prop_assert!(y >= (1.0 - inst.tau[n]) * y0 + inst.rho[n] * d - 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn per_scenario_models_add_up(seed in small_case()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (inst, set) = random_small_case(&mut rng, 2, 2, 2, 3);
        let whole = optimum(&build_extensive_form(&inst, &set, BigMRule::Safe).unwrap()).objective;
        let parts: f64 = (0..set.len())
            .map(|w| set.probabilities[w] * optimum(&single_scenario_model(&inst, &set, w, BigMRule::Safe).unwrap()).objective)
            .sum();
        prop_assert!((whole - parts).abs() < 1e-6);
    }
}
