//! The `harq-renewal` command line, callable in-process.

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::experiments::{
    parse_theta_list, run_experiment, write_result, ExperimentConfig, ExperimentError, Overrides,
    RunManifest,
};

/// Environment variable capping the worker count (0 = automatic).
pub const THREADS_ENV: &str = "HARQ_RENEWAL_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "harq-renewal",
    version,
    about = "Effective-capacity sweeps for HARQ-IR over block fading"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write its table.
    Run(RunArgs),
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Experiment name, overriding the file.
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    /// Comma-separated QoS exponents.
    #[arg(long)]
    theta: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    horizon: Option<u64>,
}

fn thread_cap(value: Option<&str>) -> Result<usize, ExperimentError> {
    match value {
        Some(v) => v.trim().parse::<usize>().map_err(|_| {
            ExperimentError::Config(format!(
                "{THREADS_ENV} must be a non-negative integer, got '{v}'"
            ))
        }),
        None => Ok(0),
    }
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig, ExperimentError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        ExperimentError::Config(format!("cannot read config {}: {e}", args.config.display()))
    })?;
    let base = ExperimentConfig::from_json(&text)?;
    let overrides = Overrides {
        experiment: args.experiment.as_deref().map(str::parse).transpose()?,
        seed: args.seed,
        snr_db: args.snr_db,
        theta: args.theta.as_deref().map(parse_theta_list).transpose()?,
        output: args.out.clone(),
        format: args.format.as_deref().map(str::parse).transpose()?,
        trials: args.trials,
        horizon: args.horizon,
    };
    base.apply(overrides)
}

fn run(args: RunArgs, threads_env: Option<&str>) -> Result<(), ExperimentError> {
    let threads = thread_cap(threads_env)?;
    let config = load_config(&args)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| ExperimentError::Config(format!("thread pool: {e}")))?;

    let started = Instant::now();
    let result = pool.install(|| run_experiment(&config))?;
    let elapsed = started.elapsed().as_secs_f64();
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let manifest = RunManifest::new(&config, &result, elapsed, threads);
    write_result(&config, &result, &manifest)
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code. `threads_env` is the value of [`THREADS_ENV`].
pub fn main_with<I, T>(args: I, threads_env: Option<&str>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => run(args, threads_env),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
