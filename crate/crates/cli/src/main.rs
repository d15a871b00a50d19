//! Scenario-driven command line for the Li-Yau estimate workbench.
//!
//! Exit codes: 0 all checks pass, 1 at least one check failed,
//! 2 configuration or environment error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use liyau_cli::config::CheckKind;
use liyau_cli::runner::{run, RunFailure, RunOptions};

#[derive(Parser)]
#[command(name = "liyau", version, about = "Gradient-estimate workbench runner")]
struct Args {
    /// Scenario configuration file (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory for reports and plot CSVs
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Parallel scenario jobs (0 = number of cores)
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Override the grid interval count for every scenario
    #[arg(long)]
    grid: Option<usize>,
    /// Override the base seed for every scenario
    #[arg(long)]
    seed: Option<u64>,
    /// Run only checks of this name (local | global | harnack | liouville |
    /// identities | kernel)
    #[arg(long)]
    check: Option<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let check_filter = match args.check.as_deref() {
        None => None,
        Some(name) => match CheckKind::parse(name) {
            Some(kind) => Some(kind),
            None => {
                eprintln!("error: unknown check '{name}'");
                return ExitCode::from(2);
            }
        },
    };
    let opts = RunOptions {
        config_path: args.config,
        out_dir: args.out,
        jobs: args.jobs,
        grid_override: args.grid,
        seed_override: args.seed,
        check_filter,
    };
    match run(&opts) {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            if outcome.all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(RunFailure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(RunFailure::Other(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
