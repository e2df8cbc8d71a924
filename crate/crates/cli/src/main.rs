//! `sparse-detect`: deterministic experiment harness for sparse signal
//! detection in linear regression.
//!
//! Every command reads an optional JSON config (defaults apply when the
//! flag is omitted), derives all randomness from `--seed`, and writes CSV
//! tables (plus plot scripts) into `--out`. Outputs are byte-identical
//! across runs and worker-thread counts.
//!
//! Exit codes: 0 success, 1 verification or computation failure, 2 usage
//! or config error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sparse_detect::commands::{lower_bound, mse, rates, risk, verify_lemmas};
use sparse_detect::config::load;
use sparse_detect::parallel::{build_pool, thread_count};
use sparse_detect::{RunError, RunOutcome};

#[derive(Parser)]
#[command(
    name = "sparse-detect",
    version,
    about = "Sparse signal detection experiments: rates, risk curves, MSE, \
             divergence lower bounds, and inequality verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the separation-rate functions over a (n, p, s, sigma) grid.
    Rates(CommonArgs),
    /// Estimate the detection-risk curve over a separation grid.
    Risk(CommonArgs),
    /// Measure the norm estimator's mean squared error against its rate.
    Mse(CommonArgs),
    /// Run the prior-mixture divergence lower-bound experiment.
    LowerBound(CommonArgs),
    /// Verify the supporting inequalities and identities numerically.
    VerifyLemmas(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to a JSON experiment config; documented defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; all random streams derive from it deterministically.
    #[arg(long)]
    seed: u64,
    /// Output directory for CSV tables and plot scripts.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads (default: SPARSE_DETECT_THREADS, then all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn dispatch(command: &Command) -> Result<RunOutcome, RunError> {
    match command {
        Command::Rates(args) => {
            let cfg = load(args.config.as_deref())?;
            // Closed-form rates need no worker pool, but an invalid
            // --threads request is still a usage error here.
            thread_count(args.threads)?;
            rates::run(&cfg, args.seed, &args.out)
        }
        Command::Risk(args) => {
            let cfg = load(args.config.as_deref())?;
            let pool = build_pool(args.threads)?;
            risk::run(&cfg, args.seed, &args.out, &pool)
        }
        Command::Mse(args) => {
            let cfg = load(args.config.as_deref())?;
            let pool = build_pool(args.threads)?;
            mse::run(&cfg, args.seed, &args.out, &pool)
        }
        Command::LowerBound(args) => {
            let cfg = load(args.config.as_deref())?;
            let pool = build_pool(args.threads)?;
            lower_bound::run(&cfg, args.seed, &args.out, &pool)
        }
        Command::VerifyLemmas(args) => {
            let cfg = load(args.config.as_deref())?;
            let pool = build_pool(args.threads)?;
            verify_lemmas::run(&cfg, args.seed, &args.out, &pool)
        }
    }
}

fn main() -> ExitCode {
    // Clap itself exits with code 2 on usage errors, matching the contract.
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(RunOutcome::Success) => ExitCode::SUCCESS,
        Ok(RunOutcome::VerificationFailure) => ExitCode::from(1),
        Err(RunError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(RunError::Failure(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
