//! Command-line runner: scenario files in, CSV and JSON artifacts out.
//!
//! Exit codes: 0 success, 2 infeasible, 3 LP and baseline disagree,
//! 4 bad configuration, 5 i/o failure, 6 solver failure.

pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::Serialize;

pub use config::ScenarioConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "mintime",
    version,
    about = "Data-driven minimum-time trajectory optimization"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding the scenario's.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Excitation seed, overriding the scenario's.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Solve the unreduced (coefficient) form of the LP.
    #[arg(long, global = true)]
    pub no_reduction: bool,
    /// Base of the slack weights, overriding the scenario's.
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    /// Also write the assembled LP as `problem.mps`.
    #[arg(long, global = true)]
    pub dump_lp: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Generate excitation data from the scenario's model.
    GenerateData,
    /// Solve the minimum-time LP from data.
    Solve,
    /// Scan arrival times on the state-space model.
    Baseline,
    /// Run both and fail if they disagree.
    Compare,
    /// Print the lag of the scenario's model.
    Lag,
}

impl Cli {
    /// Loads the scenario and applies command-line overrides.
    pub fn scenario(&self) -> Result<ScenarioConfig, CliError> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
        let mut cfg = ScenarioConfig::load(path)?;
        if let Some(out) = &self.out {
            cfg.run.out = Some(std::env::current_dir()?.join(out));
        }
        if let Some(seed) = self.seed {
            cfg.data.seed = seed;
        }
        if self.no_reduction {
            cfg.run.use_reduction = false;
        }
        if let Some(theta) = self.theta {
            cfg.run.theta_override = Some(theta);
        }
        cfg.run.dump_lp |= self.dump_lp;
        Ok(cfg)
    }
}

fn print<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let cfg = cli.scenario()?;
    match cli.command {
        Command::GenerateData => {
            let r = commands::generate(&cfg)?;
            eprintln!("data persistently exciting of order {} (L + n)", r.pe_order);
            print(&r)
        }
        Command::Solve => print(&commands::solve(&cfg)?),
        Command::Baseline => print(&commands::baseline(&cfg)?),
        Command::Compare => print(&commands::compare(&cfg)?),
        Command::Lag => print(&commands::lag(&cfg)?),
    }
}

/// Runs one command and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("mintime: {e}");
            e.exit_code()
        }
    }
}
