//! Experiment runner for first-order correlated equilibria.
//!
//! `foce run --config exp.cfg [--seed N] [--out DIR]` executes one experiment
//! per invocation and writes its artifacts under the output directory.
//! `foce describe --config exp.cfg` prints the resolved plan (dimensions,
//! bounds, applicable guarantee) without running anything.
//!
//! Exit status: 0 on success, 1 on input errors, 2 when a measured value
//! violates a proven bound (certificate margin or matcher/regret guarantee).

mod config;
mod describe;
mod runner;

use clap::{Parser, Subcommand};
use foce::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "foce", about = "first-order correlated equilibrium experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by the config and write artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for artifacts (default: config's out.dir or `.`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the resolved plan without executing.
    Describe {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, seed, out } => {
            config::load(&config, seed, out).and_then(|exp| runner::run(&exp))
        }
        Command::Describe { config, seed } => {
            config::load(&config, seed, None).and_then(|exp| describe::describe(&exp))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::TheoremViolation(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
