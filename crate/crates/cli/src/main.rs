//! `einlab`: command-line front end for the Einstein Cauchy-problem laboratory.
//!
//! Configuration precedence: built-in defaults < `--config` JSON file < flags.
//!
//! Exit codes: 0 success, 1 input error, 2 constraint or residual check failed,
//! 3 metric degenerated, 4 blow-up.

mod commands;
mod config;
mod setup;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Ctx, Exit};
use config::{Overrides, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "einlab",
    version,
    about = "Einstein metrics from Cauchy data: constraints, evolution, jets, spinors"
)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (default `einlab-out`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for random initial data (default 42).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Evaluate the Gauss–Codazzi constraints of the initial data.
    Check,
    /// Integrate the evolution equations; writes snapshots, residual CSV and a manifest.
    Evolve,
    /// Compute the formal Taylor jet of g_t and its order-by-order Einstein residual.
    Jet,
    /// Evolve and report the Einstein residual of the ambient metric.
    Verify,
    /// Generalized Killing spinor checks and parallel extension.
    Spinor,
    /// Summarize the reports present in the output directory.
    Report,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Evolve => "evolve",
            Command::Jet => "jet",
            Command::Verify => "verify",
            Command::Spinor => "spinor",
            Command::Report => "report",
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<Exit> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    cfg.apply(cli.overrides, cli.seed, cli.out);
    cfg.validate()?;
    let ctx = Ctx::new(cfg, cli.command.name());
    match cli.command {
        Command::Check => commands::check(&ctx),
        Command::Evolve => commands::evolve(&ctx),
        Command::Jet => commands::jet(&ctx),
        Command::Verify => commands::verify(&ctx),
        Command::Spinor => commands::spinor(&ctx),
        Command::Report => commands::report(&ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Exit::Input as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(exit) => ExitCode::from(exit as u8),
        Err(e) => {
            eprintln!("einlab: {e:#}");
            ExitCode::from(Exit::Input as u8)
        }
    }
}
