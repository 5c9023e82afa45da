//! Build the extensive-form model for a hand-written instance, look at its
//! size, solve the LP relaxation and decode a plan from the columns.
//!
//! ```bash
//! cargo run --example extensive_form
//! ```

use chrono::NaiveDate;

use ventplan::instance::{Horizon, PlanningInstance, Region};
use ventplan::model::{audit_big_m, build_extensive_form, BigMRule, ScenarioPlan};
use ventplan::scenario::ScenarioSet;
use ventplan::solver::{branch_and_bound, solve_lp_relaxation, SolveLimits};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let instance = PlanningInstance {
        schema_version: 1,
        regions: vec![Region::new("north"), Region::new("south")],
        horizon: Horizon::new(NaiveDate::from_ymd_opt(2020, 4, 1).unwrap(), 3),
        initial_region_inventory: vec![12, 2],
        central_initial: 0,
        production: vec![0, 1, 0],
        gamma: vec![0.5, 0.5],
        tau: vec![0.5, 0.5],
        rho: vec![0.0, 0.0],
    };
    let demand = |north: [f64; 3], south: [f64; 3]| vec![north.to_vec(), south.to_vec()];
    let set = ScenarioSet::from_demands(
        vec!["north".into(), "south".into()],
        instance.horizon,
        vec![demand([2.0, 3.0, 3.0], [3.0, 5.0, 6.0]), demand([1.0, 1.0, 2.0], [2.0, 4.0, 4.0])],
        &[3.0, 1.0],
    )?;

    let model = build_extensive_form(&instance, &set, BigMRule::Safe)?;
    println!(
        "{} columns, {} rows, {} binaries",
        model.columns.len(),
        model.rows.len(),
        model.num_binaries()
    );
    println!("first rows:");
    for row in model.rows.iter().take(4) {
        println!("  {} ({} terms, rhs {})", row.name, row.terms.len(), row.rhs);
    }

    let shortfalls = audit_big_m(&instance, &set);
    println!("cells where the tight big-M is too small: {}", shortfalls.len());

    let relaxed = solve_lp_relaxation(&model)?;
    let exact = branch_and_bound(&model, &SolveLimits::default())?;
    println!("LP bound {:.4}, MILP optimum {:.4}", relaxed.objective, exact.objective);

    let grid = &model.directory.as_ref().expect("built models carry a directory").grid;
    let values = exact.incumbent.expect("optimal solve has an incumbent");
    for w in 0..set.len() {
        let plan = ScenarioPlan::extract(grid, &values, w)?;
        println!("scenario {w}: shortage {:.3}, south inventory {:?}", plan.total_shortage(), plan.y[1]);
    }
    Ok(())
}
