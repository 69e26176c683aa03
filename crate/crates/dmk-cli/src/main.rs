//! Command-line entry point: `run` executes one configured simulation,
//! `sweep-beta` repeats it across a list of exponents, `check` runs the
//! built-in self tests.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dmk_cli::runner::{self, CommandOverrides};

#[derive(Parser)]
#[command(name = "dmk", about = "Transport network simulator", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the simulation described by a TOML config file.
    Run {
        /// Path to the config file.
        config: PathBuf,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// RNG seed for seeded scenarios (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the same config once per exponent and tabulate the outcomes.
    SweepBeta {
        /// Path to the config file.
        config: PathBuf,
        /// Comma-separated exponents, e.g. 1.1,1.5,3.0.
        #[arg(long, value_delimiter = ',', required = true)]
        betas: Vec<f64>,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// RNG seed for seeded scenarios (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the built-in self-test battery.
    Check,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, seed } => {
            match runner::run(&config, &CommandOverrides { out, seed }) {
                Ok(summary) => {
                    println!("wrote {}", summary.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::SweepBeta { config, betas, out, seed } => {
            match runner::sweep_beta(&config, &betas, &CommandOverrides { out, seed }) {
                Ok(table) => {
                    println!("wrote {}", table.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::Check => {
            if dmk_cli::check::run_battery() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
