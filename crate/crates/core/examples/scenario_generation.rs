//! Draw demand scenarios from a forecast CSV for each case preset and show
//! how the tail split and probabilities come out.
//!
//! ```bash
//! cargo run --example scenario_generation
//! ```

use std::path::Path;

use ventplan::instance::PlanningInstance;
use ventplan::scenario::{generate_scenarios, load_forecast_file, CaseLabel, CaseSpec, Tail};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let instance = PlanningInstance::load(fixtures.join("tiny_instance.json"))?;
    let series = load_forecast_file(fixtures.join("tiny_forecast.csv"), &instance.horizon, &instance.regions)?;

    for label in CaseLabel::ALL {
        let case = CaseSpec::preset(label).with_scenario_count(1000);
        let set = generate_scenarios(&series, &instance.horizon, &case, 42)?;
        let right = set.scenarios.iter().filter(|s| s.tail == Tail::Right).count();
        let right_mass: f64 = set
            .scenarios
            .iter()
            .zip(&set.probabilities)
            .filter(|(s, _)| s.tail == Tail::Right)
            .map(|(_, p)| p)
            .sum();
        println!(
            "{:<4} {:<20} P(right) {:.2}, weights {}/{}: right-tail draws {:>4}/1000, probability mass {:.3}",
            format!("{label:?}"),
            label.name(),
            case.right_tail_prob,
            case.right_tail_weight,
            case.left_tail_weight,
            right,
            right_mass
        );
    }

    // the same seed always gives the same set
    let case = CaseSpec::preset(CaseLabel::IV).with_scenario_count(3);
    let a = generate_scenarios(&series, &instance.horizon, &case, 7)?;
    let b = generate_scenarios(&series, &instance.horizon, &case, 7)?;
    assert_eq!(a, b);
    for (w, s) in a.scenarios.iter().enumerate() {
        println!("scenario {w} ({:?}, partition {}): {:?}", s.tail, s.partition, s.demand);
    }
    Ok(())
}
