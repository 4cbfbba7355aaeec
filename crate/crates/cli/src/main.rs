//! Command-line runner for tuning, experiments, verification and oracles.

mod commands;
mod config;
mod error;
mod model;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;

#[derive(Parser)]
#[command(name = "cesaro-lmc", version, about = "Cesaro-averaged Langevin Monte Carlo experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides `run.base_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the tuning plan(s) as JSON.
    Tune {
        #[command(flatten)]
        common: Common,
    },
    /// Run the configured experiment and write its artifacts.
    Run {
        #[command(flatten)]
        common: Common,
        /// Output directory; overrides `run.output`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the verification battery on the configured target.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Count unsupported checks as failures.
        #[arg(long)]
        strict: bool,
    },
    /// Compute the configured oracle value.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn setup(common: &Common) -> Result<config::Loaded, CliError> {
    if let Some(jobs) = common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot configure {jobs} worker threads: {e}")))?;
    }
    config::load(&common.config, common.seed)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Tune { common } => commands::tune(&setup(&common)?),
        Command::Run { common, output } => commands::run(&setup(&common)?, output),
        Command::Verify { common, strict } => commands::verify(&setup(&common)?, strict),
        Command::Oracle { common, output } => commands::oracle(&setup(&common)?, output),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
