//! Load the bundled two-region fixture, run the whole pipeline and print the
//! shortage summary.
//!
//! ```bash
//! cargo run --example quickstart
//! ```

use std::path::Path;

use ventplan::orchestrator::{run_with_progress, RunConfig};
use ventplan::report::render_summary;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let (config, base) = RunConfig::load(fixtures.join("tiny_run.json"))?;

    let out = run_with_progress(&config, &base, &|p| {
        println!("solved {}/{}", p.solved, p.total);
    })?;

    print!("{}", render_summary(&out.report));
    Ok(())
}
