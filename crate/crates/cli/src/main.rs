use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gridres::hazard::HazardType;
use gridres_cli::{cmd_report, cmd_risk, cmd_run, cmd_scenarios, cmd_validate, Overrides, StudyConfig};
use log::error;

#[derive(Parser)]
#[command(name = "gridres", version, about = "Multi-hazard grid resilience studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Study configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Scenarios per hazard and day.
    #[arg(long, global = true)]
    scenarios: Option<u32>,
    /// Restrict to a hazard; repeat for several.
    #[arg(long = "hazard", global = true)]
    hazards: Vec<HazardType>,
    /// Inclusive day range, `A..B`.
    #[arg(long, global = true)]
    days: Option<String>,
    /// Undergrounding plan (JSON).
    #[arg(long, global = true)]
    plan: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    parallel: Option<usize>,
    /// Keep per-line draws in scenarios.jsonl.
    #[arg(long, global = true)]
    trace: bool,
    #[arg(long, global = true)]
    enforce_gen_min: bool,
    #[arg(long, global = true)]
    lp_tol: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Check every input without solving.
    Validate,
    /// Write county risk per hazard and day.
    Risk,
    /// Write risk and outage scenarios.
    Scenarios,
    /// Run the full study.
    Run,
    /// Rebuild summaries and charts from results.csv.
    Report,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let Some(path) = cli.config.clone() else {
        error!("--config is required");
        return ExitCode::from(1);
    };
    let overrides = Overrides {
        seed: cli.seed,
        scenarios: cli.scenarios,
        hazards: cli.hazards.clone(),
        days: cli.days.clone(),
        plan: cli.plan.clone(),
        out: cli.out.clone(),
        parallel: cli.parallel,
        trace: cli.trace,
        enforce_gen_min: cli.enforce_gen_min,
        lp_tol: cli.lp_tol,
    };
    let config = match StudyConfig::load(&path, &overrides) {
        Ok(c) => c,
        Err(e) => {
            error!("{e}");
            return ExitCode::from(1);
        }
    };

    let outcome = match cli.command {
        Command::Validate => {
            let findings = cmd_validate(&config);
            for f in &findings {
                println!("{f}");
            }
            return if findings.is_empty() {
                println!("ok");
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
        Command::Risk => cmd_risk(&config),
        Command::Scenarios => cmd_scenarios(&config),
        Command::Run => cmd_run(&config),
        Command::Report => cmd_report(&config),
    };
    match outcome {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
