//! `bubble`: scenario-driven front end writing CSV.

mod commands;
mod error;
mod output;
mod scenario;

use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use commands::{Command, Overrides};
use error::CliError;
use scenario::Scenario;

#[derive(Debug, Parser)]
#[command(name = "bubble", version, about = "Bubble markets with a single crash: classify, solve, simulate")]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Scenario file (TOML, or JSON with a .json extension)
    #[arg(long)]
    scenario: PathBuf,
    /// Write CSV here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of solver knots
    #[arg(long)]
    grid: Option<usize>,
    /// Monte Carlo paths
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long, env = "BUBBLE_SEED")]
    seed: Option<u64>,
    /// Simulate (or classify) under the dual measure of the solution
    #[arg(long)]
    under_q: bool,
    /// Solver convergence tolerance
    #[arg(long)]
    tol: Option<f64>,
}

fn execute(args: &Args) -> Result<(), CliError> {
    let scenario = Scenario::load(&args.scenario)?;
    let overrides = Overrides { grid: args.grid, paths: args.paths, seed: args.seed, under_q: args.under_q, tol: args.tol };
    let table = commands::run(args.command, &scenario, &overrides)?;
    match &args.out {
        Some(path) => {
            let f = File::create(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
            table.write(BufWriter::new(f))
        }
        None => table.write(io::stdout().lock()),
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Parse(e.to_string().trim_end().replace('\n', " "));
            eprintln!("{}", err.line());
            return ExitCode::from(err.code() as u8);
        }
    };
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.code() as u8)
        }
    }
}
