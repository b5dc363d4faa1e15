//! Command-line driver for the identification laboratory. Every subcommand
//! takes a JSON run configuration, writes its artifacts plus a manifest into
//! an output directory, and exits 0 only when nothing was flagged.
//!
//! Exit codes: 2 for a configuration the run never started from (unreadable,
//! unparseable, or violating a precondition), 3 for a run that started but
//! failed or ended with flagged diagnostics.

mod config;
mod manifest;
mod run;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{RunArgs, RunKind};

#[derive(Debug)]
pub enum CliError {
    Schema(String),
    Failure(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Schema(msg) | CliError::Failure(msg) => f.write_str(msg),
        }
    }
}

impl From<idlab_core::Error> for CliError {
    fn from(e: idlab_core::Error) -> Self {
        CliError::Failure(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "idlab", version, about = "Identification laboratory for discrete-outcome models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact conditional choice probability table, optionally with draws
    Forward(RunArgs),
    /// Latent-index choice kernel inverted from the CCP table
    RecoverH(RunArgs),
    /// Index coefficients from the curvature of the CCP surface
    IdentBeta(RunArgs),
    /// Heterogeneity CDF along the rays the z2 points span
    RecoverFg(RunArgs),
    /// Solution concept and payoffs of a 2-player entry game
    GameClassify(RunArgs),
    /// Forward table, kernel, and index coefficients in one run
    FullPipeline(RunArgs),
}

impl Command {
    fn split(&self) -> (RunKind, &RunArgs) {
        match self {
            Command::Forward(a) => (RunKind::Forward, a),
            Command::RecoverH(a) => (RunKind::RecoverH, a),
            Command::IdentBeta(a) => (RunKind::IdentBeta, a),
            Command::RecoverFg(a) => (RunKind::RecoverFg, a),
            Command::GameClassify(a) => (RunKind::GameClassify, a),
            Command::FullPipeline(a) => (RunKind::FullPipeline, a),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = init_threads() {
        eprintln!("idlab: {msg}");
        return ExitCode::from(2);
    }
    let (kind, args) = cli.command.split();
    match config::resolve(kind, args).and_then(|resolved| run::execute(&resolved)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Schema(msg)) => {
            eprintln!("idlab: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("idlab: {msg}");
            ExitCode::from(3)
        }
    }
}

/// IDLAB_THREADS caps the rayon pool; unset leaves the default (one thread
/// per core).
fn init_threads() -> Result<(), String> {
    let Ok(text) = std::env::var("IDLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = text
        .trim()
        .parse()
        .map_err(|_| format!("IDLAB_THREADS must be a positive integer, got {text:?}"))?;
    if n == 0 {
        return Err("IDLAB_THREADS must be a positive integer".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("cannot size the thread pool: {e}"))
}
