use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dfsdca_cli::config::ExperimentConfig;
use dfsdca_cli::runner::{run_experiment, RunOptions};

#[derive(Parser)]
#[command(name = "dfsdca", version, about = "Experiment runner for the dual-free SDCA solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config file.
    Run {
        /// Path to the experiment config.
        config: PathBuf,
        /// Replace the config's seed list (comma-separated).
        #[arg(long, value_delimiter = ',', value_name = "SEEDS")]
        seed_override: Option<Vec<u64>>,
        /// Replace the config's output directory.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// Suppress the stdout report.
        #[arg(long)]
        quiet: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            seed_override,
            out,
            quiet,
        } => {
            let config = match ExperimentConfig::from_path(&config) {
                Ok(config) => config,
                Err(err) => {
                    eprintln!("error: {err:#}");
                    return ExitCode::from(2);
                }
            };
            let opts = RunOptions {
                out_override: out,
                seed_override,
                quiet,
            };
            match run_experiment(&config, &opts) {
                Ok(outcome) if outcome.checks_passed() => ExitCode::SUCCESS,
                Ok(outcome) => {
                    for violation in &outcome.summary.violations {
                        eprintln!("check failed: {violation}");
                    }
                    ExitCode::FAILURE
                }
                Err(err) => {
                    eprintln!("error: {err:#}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
