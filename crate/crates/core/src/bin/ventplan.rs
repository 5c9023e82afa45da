use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use ventplan::instance::PlanningInstance;
use ventplan::model::{build_extensive_form, BigMRule};
use ventplan::orchestrator::{self, JobService, ParameterOverrides, RunConfig, Source};
use ventplan::report::{emit_daily_csv, emit_report, parse_report_json, render_summary, ReportFormat};
use ventplan::scenario::{generate_scenarios, load_forecast_file, CaseLabel, CaseSpec};
use ventplan::solver::io::{export_model, ModelFormat};
use ventplan::solver::{SolveLimits, Strategy};

#[derive(Parser)]
#[command(name = "ventplan", version, about = "Ventilator allocation planning under demand uncertainty")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample demand scenarios from a forecast CSV.
    GenerateScenarios(GenerateArgs),
    /// Run the full pipeline and write the report.
    Solve(SolveArgs),
    /// Print or convert a saved report.
    Report(ReportArgs),
    /// Start the HTTP job service.
    Serve(ServeArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Planning instance JSON.
    #[arg(long)]
    instance: PathBuf,
    /// Forecast CSV with columns region,date,mean,lower,upper.
    #[arg(long)]
    forecast: PathBuf,
    /// Case preset: I, II, III or IV.
    #[arg(long, default_value = "IV")]
    case: CaseLabel,
    #[arg(long)]
    scenario_count: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Run config JSON. Other flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    forecast: Option<PathBuf>,
    /// Pre-generated scenario set JSON, used instead of sampling.
    #[arg(long)]
    scenarios: Option<PathBuf>,
    #[arg(long)]
    case: Option<CaseLabel>,
    #[arg(long)]
    scenario_count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// per-scenario or monolithic.
    #[arg(long)]
    strategy: Option<Strategy>,
    /// safe or tight.
    #[arg(long, value_parser = parse_big_m)]
    big_m: Option<BigMRule>,
    /// Seconds per branch-and-bound.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    relative_gap: Option<f64>,
    #[arg(long)]
    node_limit: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    central_initial: Option<u64>,
    /// Directory for config, scenarios, report and CSV tables.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Write the extensive form (.lp or .mps) for an external solver
    /// instead of solving.
    #[arg(long)]
    export_model: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Report JSON written by `solve`.
    report: PathBuf,
    /// summary, json, csv (flows) or daily.
    #[arg(long, default_value = "summary")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Root directory for job run folders.
    #[arg(long, default_value = "runs")]
    runs: PathBuf,
    #[arg(long, default_value_t = 2)]
    workers: usize,
}

fn parse_big_m(s: &str) -> Result<BigMRule, String> {
    match s {
        "safe" => Ok(BigMRule::Safe),
        "tight" => Ok(BigMRule::Tight),
        other => Err(format!("unknown big-M rule {other:?} (expected safe or tight)")),
    }
}

type CliResult = Result<(), Box<dyn std::error::Error>>;

fn write_out(out: Option<&Path>, bytes: &[u8]) -> CliResult {
    match out {
        Some(path) => fs::write(path, bytes)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes)?;
        }
    }
    Ok(())
}

fn generate(args: GenerateArgs) -> CliResult {
    let instance = PlanningInstance::load(&args.instance)?;
    let series = load_forecast_file(&args.forecast, &instance.horizon, &instance.regions)?;
    let mut case = CaseSpec::preset(args.case);
    if let Some(k) = args.scenario_count {
        case = case.with_scenario_count(k);
    }
    let set = generate_scenarios(&series, &instance.horizon, &case, args.seed)?;
    write_out(args.out.as_deref(), set.to_json().as_bytes())
}

fn solve_config(args: &SolveArgs) -> Result<(RunConfig, PathBuf), Box<dyn std::error::Error>> {
    let (mut config, base) = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => {
            let instance = args.instance.clone().ok_or("--instance or --config is required")?;
            let mut c = RunConfig::new(Source::Path(instance), Source::Path(PathBuf::new()));
            c.forecast = None;
            (c, PathBuf::new())
        }
    };
    // flags are relative to the working directory, config entries to the config file
    let cwd = std::env::current_dir()?;
    let abs = |p: &PathBuf| cwd.join(p);
    if let Some(p) = &args.instance {
        config.instance = Source::Path(abs(p));
    }
    if let Some(p) = &args.forecast {
        config.forecast = Some(Source::Path(abs(p)));
    }
    if let Some(p) = &args.scenarios {
        config.scenarios = Some(Source::Path(abs(p)));
    }
    if let Some(case) = args.case {
        config.case = orchestrator::CaseChoice::Preset(case);
    }
    config.scenario_count = args.scenario_count.or(config.scenario_count);
    config.seed = args.seed.unwrap_or(config.seed);
    config.strategy = args.strategy.unwrap_or(config.strategy);
    config.big_m = args.big_m.unwrap_or(config.big_m);
    let limits: &mut SolveLimits = &mut config.limits;
    limits.time_limit = args.time_limit.unwrap_or(limits.time_limit);
    limits.relative_gap = args.relative_gap.unwrap_or(limits.relative_gap);
    limits.node_limit = args.node_limit.or(limits.node_limit);
    let o: &mut ParameterOverrides = &mut config.overrides;
    o.gamma = args.gamma.or(o.gamma);
    o.tau = args.tau.or(o.tau);
    o.rho = args.rho.or(o.rho);
    o.central_initial = args.central_initial.or(o.central_initial);
    if let Some(dir) = &args.out_dir {
        config.output.dir = Some(abs(dir));
    }
    Ok((config, base))
}

fn solve(args: SolveArgs) -> CliResult {
    let (config, base) = solve_config(&args)?;
    if let Some(path) = &args.export_model {
        let format: ModelFormat = path
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or("")
            .parse()?;
        let (instance, scenarios) = orchestrator::prepare(&config, &base)?;
        let model = build_extensive_form(&instance, &scenarios, config.big_m)?;
        fs::write(path, export_model(&model, format))?;
        eprintln!(
            "wrote {} ({} columns, {} rows, {} binaries)",
            path.display(),
            model.columns.len(),
            model.rows.len(),
            model.num_binaries()
        );
        return Ok(());
    }
    let out = orchestrator::run_with_progress(&config, &base, &|p| {
        log::info!("solved {}/{} scenarios", p.solved, p.total);
    })?;
    print!("{}", render_summary(&out.report));
    if let Some(dir) = &config.output.dir {
        eprintln!("outputs written to {}", dir.display());
    }
    Ok(())
}

fn report(args: ReportArgs) -> CliResult {
    let bundle = parse_report_json(&fs::read(&args.report)?)?;
    let bytes = match args.format.as_str() {
        "summary" => render_summary(&bundle).into_bytes(),
        "daily" => emit_daily_csv(&bundle)?,
        other => emit_report(&bundle, other.parse::<ReportFormat>()?)?,
    };
    write_out(args.out.as_deref(), &bytes)
}

fn serve(args: ServeArgs) -> CliResult {
    let service = Arc::new(JobService::new(&args.runs, std::env::current_dir()?, args.workers)?);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(orchestrator::serve(args.addr, service))?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenerateScenarios(a) => generate(a),
        Command::Solve(a) => solve(a),
        Command::Report(a) => report(a),
        Command::Serve(a) => serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
