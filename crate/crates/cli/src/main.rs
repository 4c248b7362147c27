//! Command-line runner for CIOD-MBM experiments.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 I/O failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Parser, Debug)]
#[command(name = "ciod-mbm", version, about = "CIOD-MBM link simulations and analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo BER for every section of a config file.
    Simulate(RunArgs),
    /// Union-bound ABEP over the same grid.
    Abep(RunArgs),
    /// Rotation angle maximising the minimum coding gain distance.
    OptimizeAngle(RunArgs),
    /// Simulates rate-matched sections and reports their Eb/N0 gaps.
    Compare {
        #[command(flatten)]
        run: RunArgs,
        /// Compare union-bound curves instead of simulations.
        #[arg(long)]
        theory: bool,
    },
    /// Concatenates result files.
    Merge {
        #[arg(short, long)]
        output: PathBuf,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Experiment config file.
    pub config: PathBuf,
    /// Overrides the seed of every section.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the worker count of every section.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=1024))]
    pub workers: Option<u64>,
    /// Output file; defaults to the config's `output_path`, then a name
    /// derived from the config file.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Abep(a) => commands::abep(&a),
        Command::OptimizeAngle(a) => commands::optimize_angle(&a),
        Command::Compare { run, theory } => commands::compare(&run, theory),
        Command::Merge { output, inputs } => commands::merge(&output, &inputs),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
