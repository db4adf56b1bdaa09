//! Batch front end over the core library: eigenanalysis, constant
//! certification, monitored simulation, and basin sweeps, all driven by one
//! JSON scenario file. Exit codes: 0 all checks pass, 1 error, 2 a
//! completed run violated a certified relation.

mod commands;
mod config;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "beamlab", version, about = "Gap-pair beam dynamics laboratory")]
struct Cli {
    /// Scenario file (JSON). Required by every subcommand except `verify`.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override the output directory from the scenario file.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Override the sweep base seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Worker threads for sweep rows.
    #[arg(long, global = true, value_name = "N", default_value_t = 1)]
    workers: usize,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// First k pencil eigenvalues, with exact beam values when applicable.
    Eigs,
    /// Certify the full constant chain and re-verify every inequality.
    Constants,
    /// Integrate one scenario, monitor the energies, classify the tail.
    Simulate,
    /// Classify a batch of seeded random initial states.
    Sweep,
    /// Run the built-in property battery on reference pairs.
    Verify,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {}", commands::describe(&err));
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    if matches!(cli.cmd, Cmd::Verify) {
        return commands::run_verify();
    }
    let path = cli
        .config
        .as_ref()
        .context("--config PATH is required for this subcommand")?;
    let cfg = config::load(path)?;
    match cli.cmd {
        Cmd::Eigs => commands::eigs(&cfg, &cli.out),
        Cmd::Constants => commands::constants(&cfg, &cli.out),
        Cmd::Simulate => commands::simulate(&cfg, &cli.out),
        Cmd::Sweep => commands::sweep(&cfg, &cli.out, cli.seed, cli.workers),
        Cmd::Verify => unreachable!(),
    }
}
