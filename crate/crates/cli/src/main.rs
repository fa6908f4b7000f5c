//! `kgraph`: batch front-end for the Killing graph solver.
//!
//! Exit codes: 0 success, 1 hypotheses fail (`check`, or `solve` with
//! `--require-hypotheses`), 2 solver non-convergence or stall, 3 bad config.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{error::ErrorKind, Parser, Subcommand};

use commands::{Invocation, Outcome};
use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "kgraph", version, about = "Prescribed mean curvature Killing graphs in warped products")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the Dirichlet problem and write solution, history and reports.
    Solve(Flags),
    /// Evaluate the hypotheses of the selected existence theorem.
    Check(Flags),
    /// Integrate the rotational CMC profile.
    Rotational(Flags),
    /// Run a manufactured-solution convergence study.
    Mms(Flags),
    /// Solve and check the flux identity.
    Flux(Flags),
}

#[derive(Debug, clap::Args)]
struct Flags {
    /// INI run configuration.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory, overriding `[output] directory`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Exit 1 without solving when the theorem hypotheses fail.
    #[arg(long)]
    require_hypotheses: bool,
    /// Cell count override for the first grid direction.
    #[arg(long, value_name = "N")]
    grid: Option<usize>,
}

fn invocation(flags: &Flags) -> Result<Invocation, Outcome> {
    let mut config = RunConfig::load(&flags.config)?;
    if let Some(m) = flags.grid {
        config.override_grid(m)?;
    }
    Ok(Invocation { config, out: flags.out.clone(), require_hypotheses: flags.require_hypotheses })
}

fn run(cli: Cli) -> Outcome {
    type Action = fn(&Invocation) -> Result<Outcome, Outcome>;
    let (flags, action): (&Flags, Action) = match &cli.command {
        Command::Solve(f) => (f, commands::run_solve),
        Command::Check(f) => (f, commands::run_check),
        Command::Rotational(f) => (f, commands::run_rotational),
        Command::Mms(f) => (f, commands::run_mms),
        Command::Flux(f) => (f, commands::run_flux),
    };
    match invocation(flags).and_then(|inv| action(&inv)) {
        Ok(o) | Err(o) => o,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(3),
            };
        }
    };
    let outcome = run(cli);
    match &outcome {
        Outcome::Success => {}
        Outcome::HypothesisFailure => eprintln!("kgraph: hypotheses FAIL"),
        Outcome::SolverFailure(m) | Outcome::ConfigFailure(m) | Outcome::Io(m) => eprintln!("kgraph: error: {m}"),
    }
    ExitCode::from(outcome.code())
}
