//! Solve the fixture and turn the plans into report tables: daily expected
//! shortage, the worst day and state, and per-region flows as CSV.
//!
//! ```bash
//! cargo run --example flows_report
//! ```

use std::path::Path;

use ventplan::orchestrator::{run_with_progress, RunConfig};
use ventplan::report::{emit_daily_csv, emit_report, parse_report_json, ReportFormat};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let (config, base) = RunConfig::load(fixtures.join("grid_run.json"))?;
    let report = run_with_progress(&config, &base, &|_| {})?.report;

    let s = &report.shortage;
    println!("total expected shortage {:.3} ventilator-days", s.total);
    println!("worst day {} with {:.3}", s.worst_day.date, s.worst_day.value);
    println!(
        "worst region-day {} in {} with {:.3}",
        s.worst_day_state.date, s.worst_day_state.region, s.worst_day_state.value
    );

    println!("\n{}", String::from_utf8(emit_daily_csv(&report)?)?);
    println!("{}", String::from_utf8(emit_report(&report, ReportFormat::Csv)?)?);

    let json = emit_report(&report, ReportFormat::Json)?;
    assert_eq!(parse_report_json(&json)?, report);
    println!("report JSON is {} bytes and reads back unchanged", json.len());
    Ok(())
}
