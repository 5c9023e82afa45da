//! Sweep sharing, central stock and withheld inventory on the three-region
//! fixture and print expected shortage for each setting.
//!
//! ```bash
//! cargo run --example what_if_sweep
//! ```

use std::path::Path;

use ventplan::instance::PlanningInstance;
use ventplan::model::BigMRule;
use ventplan::orchestrator::ParameterOverrides;
use ventplan::scenario::ScenarioSet;
use ventplan::solver::{solve_plan, SolveLimits, Strategy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let base = PlanningInstance::load(fixtures.join("grid_instance.json"))?;
    let set = ScenarioSet::load(fixtures.join("grid_scenarios.json"))?;

    println!("{:>6} {:>6} {:>4} {:>10}", "gamma", "tau", "I", "shortage");
    for gamma in [0.5, 0.6, 0.75] {
        for tau in [0.0, 0.25, 0.5] {
            for stock in [0, 5, 10] {
                let instance = ParameterOverrides {
                    gamma: Some(gamma),
                    tau: Some(tau),
                    rho: None,
                    central_initial: Some(stock),
                }
                .apply(base.clone());
                let plan = solve_plan(&instance, &set, Strategy::PerScenario, BigMRule::Safe, &SolveLimits::default())?;
                println!("{gamma:>6} {tau:>6} {stock:>4} {:>10.3}", plan.objective);
            }
        }
    }
    Ok(())
}
