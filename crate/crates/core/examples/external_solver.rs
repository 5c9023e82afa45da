//! Export the extensive form as LP and MPS for an outside MILP solver, read
//! the model back, and check a solution file the way one returned by that
//! solver would be checked.
//!
//! ```bash
//! cargo run --example external_solver -- /tmp/plan
//! ```

use std::path::{Path, PathBuf};

use ventplan::model::build_extensive_form;
use ventplan::orchestrator::{prepare, RunConfig};
use ventplan::solver::io::{
    export_model, import_model, parse_solution, same_model_up_to_row_order, write_solution, ModelFormat,
};
use ventplan::solver::{branch_and_bound, check_feasibility, SolveLimits};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let stem: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ventplan_tiny"));

    let (config, base) = RunConfig::load(fixtures.join("tiny_run.json"))?;
    let (instance, scenarios) = prepare(&config, &base)?;
    let model = build_extensive_form(&instance, &scenarios, config.big_m)?;

    for format in [ModelFormat::Lp, ModelFormat::Mps] {
        let path = stem.with_extension(format.extension());
        let bytes = export_model(&model, format);
        std::fs::write(&path, &bytes)?;
        let back = import_model(&std::fs::read(&path)?, format)?;
        println!(
            "wrote {} ({} bytes), reads back identical: {}",
            path.display(),
            bytes.len(),
            same_model_up_to_row_order(&model, &back)
        );
    }

    // stand-in for the external solver's answer
    let result = branch_and_bound(&model, &SolveLimits::default())?;
    let text = write_solution(&model, result.incumbent.as_ref().unwrap());
    let sol_path = stem.with_extension("sol");
    std::fs::write(&sol_path, &text)?;

    let values = parse_solution(&model, &std::fs::read_to_string(&sol_path)?)?;
    let violations = check_feasibility(&model, &values, 1e-6);
    println!(
        "{}: objective {:.4}, {} violations",
        sol_path.display(),
        model.objective_value(&values),
        violations.len()
    );

    // a tampered solution names what it breaks
    let mut broken = values.clone();
    broken[0] += 1.0;
    for v in check_feasibility(&model, &broken, 1e-6).iter().take(3) {
        println!("  {v}");
    }
    Ok(())
}
