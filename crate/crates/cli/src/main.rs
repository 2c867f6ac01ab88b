//! `hubspoke`: design tables, admissibility checks, simulations, mass-ratio
//! tuning and curve traces for hub-and-spoke tethered formations.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "hubspoke", version, about)]
struct Cli {
    /// JSON configuration file (defaults are used when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set formation.n_deputies=5`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Worker threads for parallel evaluations.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List admissible formations for small p, q.
    Design {
        /// Upper bound on p and q.
        #[arg(long, default_value_t = 4)]
        max: u32,
    },
    /// Check admissibility, entanglement, cancellation and stability.
    Check,
    /// Propagate the configured formation and report its deviations.
    Simulate {
        /// Add per-body positions to the time series.
        #[arg(long)]
        full_state: bool,
    },
    /// Tune the mass ratio for each configured amplitude.
    Optimize,
    /// Sample the theoretical curves of every deputy.
    Trace,
}

/// Exit statuses.
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("config-invalid: --jobs must be at least 1");
            return ExitCode::from(EXIT_CONFIG);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    let cfg = match config::load(cli.config.as_deref(), &cli.overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let out = cli.out.unwrap_or_else(|| PathBuf::from("."));
    let result = match cli.command {
        Command::Design { max } => commands::design(&cfg, max, &out),
        Command::Check => commands::check(&cfg, &out),
        Command::Simulate { full_state } => commands::simulate(&cfg, &out, full_state),
        Command::Optimize => commands::optimize(&cfg, &out),
        Command::Trace => commands::trace(&cfg, &out),
    };
    match result {
        Ok(commands::Outcome::Pass) => ExitCode::SUCCESS,
        Ok(commands::Outcome::CheckFailed) => ExitCode::from(EXIT_CHECK_FAILED),
        Err(commands::Failure::Config(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(commands::Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
