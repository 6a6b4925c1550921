//! `ptm`: scenario runner for PT-moment estimation from randomized
//! measurements.
//!
//! Every subcommand reads a TOML scenario file, writes its results into the
//! output directory and lists them, with SHA-256 digests, in
//! `manifest_<command>.json`. Exit codes: 0 success, 2 configuration error,
//! 3 data error, 4 resource limit.

mod commands;
mod config;
mod error;
mod output;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Config, Overrides};
use error::CliResult;

#[derive(Parser)]
#[command(
    name = "ptm",
    version,
    about = "PT-moments from randomized measurements"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Number of random unitaries.
    #[arg(long)]
    m: Option<usize>,
    /// Shots per unitary.
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-figure CSV tables.
    #[arg(long)]
    emit_plot_data: bool,
}

impl Common {
    fn load(&self) -> CliResult<(Config, Vec<u8>)> {
        let overrides = Overrides {
            m: self.m,
            p: self.p,
            seed: self.seed,
            out: self.out.clone(),
        };
        Config::load(&self.config, &overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate randomized-measurement datasets.
    Simulate(Common),
    /// Estimate PT-moments from datasets.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Dataset files; defaults to the config list or the simulate manifest.
        #[arg(long = "dataset")]
        datasets: Vec<PathBuf>,
    },
    /// Exact comparison of entanglement conditions.
    Compare(Common),
    /// Monte Carlo error-scaling sweep.
    Sweep(Common),
    /// Werner-state analytics.
    Werner {
        #[command(flatten)]
        common: Common,
        /// Local dimension.
        #[arg(long)]
        d: Option<usize>,
    },
}

fn run(cli: Cli) -> CliResult<PathBuf> {
    match cli.command {
        Command::Simulate(c) => {
            let (cfg, bytes) = c.load()?;
            commands::simulate(&cfg, &bytes)
        }
        Command::Estimate { common, datasets } => {
            let (cfg, bytes) = common.load()?;
            commands::estimate_cmd(&cfg, &bytes, &datasets, common.emit_plot_data)
        }
        Command::Compare(c) => {
            let (cfg, bytes) = c.load()?;
            commands::compare(&cfg, &bytes, c.emit_plot_data)
        }
        Command::Sweep(c) => {
            let (cfg, bytes) = c.load()?;
            commands::sweep(&cfg, &bytes, c.emit_plot_data)
        }
        Command::Werner { common, d } => {
            let (cfg, bytes) = common.load()?;
            commands::werner(&cfg, &bytes, d)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(manifest) => {
            println!("{}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
