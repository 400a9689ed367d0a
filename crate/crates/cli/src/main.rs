//! `sucre` command-line runner: one subcommand per experiment plus `validate`.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use sucre::harness::validate::{run_validation, ValidationConfig};
use sucre::harness::{run_experiment, write_csv, ExperimentId, ExperimentSpec};

#[derive(Parser)]
#[command(name = "sucre", version, about = "Massive MIMO random-access simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bias and NMSE of the gain-sum estimators versus M.
    EstimatorCompare(RunArgs),
    /// Two-UE collision versus the SNR gap.
    TwoUe(RunArgs),
    /// Resolution probability versus M in a loaded cell.
    ResolveVsM(RunArgs),
    /// Outcome probabilities versus the bias δ.
    BiasSweep(RunArgs),
    /// Multi-attempt access versus the number of idle UEs.
    Crowded(RunArgs),
    /// Cross-check closed forms against simulation.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct Common {
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    /// TOML file overriding the experiment defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Trials per sweep point (blocks per run for `crowded`).
    #[arg(long)]
    trials: Option<usize>,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ValidateArgs {
    /// Draws per Monte-Carlo comparison.
    #[arg(long)]
    trials: Option<usize>,
    #[command(flatten)]
    common: Common,
}

fn init_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

fn run(id: ExperimentId, args: RunArgs) -> Result<ExitCode> {
    init_threads(args.common.threads)?;
    let mut spec = match &args.config {
        Some(path) => ExperimentSpec::load(id, path)?,
        None => ExperimentSpec::defaults(id),
    };
    if let Some(s) = args.common.seed {
        spec.seed = s;
    }
    if let Some(t) = args.trials {
        spec.trials = t;
    }
    if let Some(o) = args.out {
        spec.out = Some(o);
    }
    log::info!(
        "running {id}: {} points, {} trials, seed {}",
        spec.grid.len(),
        spec.trials,
        spec.seed
    );
    let result = run_experiment(&spec)?;
    if spec.out.is_none() {
        write_csv(&result, std::io::stdout().lock())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn validate(args: ValidateArgs) -> Result<ExitCode> {
    init_threads(args.common.threads)?;
    let mut cfg = ValidationConfig::default();
    if let Some(s) = args.common.seed {
        cfg.seed = s;
    }
    if let Some(t) = args.trials {
        cfg.draws = t;
    }
    let checks = run_validation(&cfg)?;
    let mut failed = 0;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        failed += usize::from(!c.passed);
    }
    println!("{} checks, {failed} failed", checks.len());
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::EstimatorCompare(a) => run(ExperimentId::EstimatorCompare, a),
        Command::TwoUe(a) => run(ExperimentId::TwoUe, a),
        Command::ResolveVsM(a) => run(ExperimentId::ResolveVsM, a),
        Command::BiasSweep(a) => run(ExperimentId::BiasSweep, a),
        Command::Crowded(a) => run(ExperimentId::Crowded, a),
        Command::Validate(a) => validate(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
