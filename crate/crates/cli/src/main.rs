//! `besov`: reproducible Besov-norm, simulation and CLT experiments.
//!
//! Exit codes: 0 success, 1 bound violation or failed computation,
//! 2 usage or input error, 3 I/O error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod manifest;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use besov_core::Error;
use commands::{CltArgs, EntropyArgs, Job, NormArgs, SimulateArgs, TailsArgs};

#[derive(Debug, Parser)]
#[command(
    name = "besov",
    version,
    about = "Besov norms, Gaussian processes and CLT experiments"
)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Lp norm, Besov seminorm and norm of a sampled path.
    Norm(NormArgs),
    /// Simulate an ensemble of paths.
    Simulate(SimulateArgs),
    /// Monte Carlo CLT experiment with moment and tail bound checks.
    Clt(CltArgs),
    /// Grand Lebesgue tail bounds.
    Tails(TailsArgs),
    /// Entropy integrals V(m) and beta(m).
    Entropy(EntropyArgs),
    /// Re-run a recorded manifest and compare outputs byte for byte.
    Verify {
        /// Output directory, manifest.json, JSON report or CSV with a manifest header.
        artifact: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 3,
        Error::InvalidArgument(_) | Error::Unsupported(_) | Error::Parse(_) => 2,
        Error::BudgetExceeded { .. } => 2,
        Error::Numeric(_) | Error::UndefinedDistance(_) => 1,
    }
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit_code(&e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let job = match cli.command {
        Command::Norm(a) => Job::Norm(a),
        Command::Simulate(a) => Job::Simulate(a),
        Command::Clt(a) => Job::Clt(a),
        Command::Tails(a) => Job::Tails(a),
        Command::Entropy(a) => Job::Entropy(a),
        Command::Verify { artifact } => return run_verify(&artifact),
    };
    match job.run() {
        Ok(o) if o.pass => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => fail(e),
    }
}

fn run_verify(artifact: &std::path::Path) -> ExitCode {
    let scratch = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return fail(e.into()),
    };
    match verify::verify(artifact, scratch.path()) {
        Ok(report) => {
            for (name, same) in &report.files {
                println!("{} {name}", if *same { "identical" } else { "DIFFERS" });
            }
            if report.identical() {
                println!("{}: outputs reproduced", report.command);
                ExitCode::SUCCESS
            } else {
                println!("{}: outputs differ", report.command);
                ExitCode::from(1)
            }
        }
        Err(e) => fail(e),
    }
}
