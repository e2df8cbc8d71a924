//! Command-line harness for the sparse signal detection toolkit.
//!
//! The binary exposes five commands, each a pure function of a JSON config
//! and a master seed:
//!
//! * `rates` — tabulate the rate functions over a (n, p, s, sigma) grid;
//! * `risk` — Monte Carlo detection-risk curve over a separation grid,
//!   with a companion gnuplot script;
//! * `mse` — norm-estimation mean squared error against its rate;
//! * `lower-bound` — prior-mixture divergence experiment with closed-form
//!   reference bounds and the implied risk floor;
//! * `verify-lemmas` — numerical verification report for the supporting
//!   inequalities and identities.
//!
//! Outputs are CSV tables (plus plot scripts) that are byte-identical
//! across runs and across worker-thread counts. Exit codes: 0 on success,
//! 1 when a verified inequality fails (or a computation fails), 2 for
//! usage and config errors.

// Guards are written `!(x > 0.0)` on purpose: unlike `x <= 0.0`, the negated
// form also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;
pub mod parallel;

/// Failure modes, split by the process exit code they map onto.
#[derive(Debug)]
pub enum RunError {
    /// Bad invocation or config file: exit code 2.
    Usage(String),
    /// Runtime failure (computation or IO): exit code 1.
    Failure(anyhow::Error),
}

impl RunError {
    /// Usage/config error (exit code 2).
    pub fn usage(msg: impl Into<String>) -> Self {
        RunError::Usage(msg.into())
    }

    /// Runtime failure (exit code 1).
    pub fn failure(err: impl Into<anyhow::Error>) -> Self {
        RunError::Failure(err.into())
    }
}

impl From<anyhow::Error> for RunError {
    fn from(err: anyhow::Error) -> Self {
        RunError::Failure(err)
    }
}

/// Result of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunOutcome {
    /// All outputs written; every verified inequality passed. Exit code 0.
    Success,
    /// All outputs written, but at least one verified inequality failed;
    /// the failing rows were reported. Exit code 1.
    VerificationFailure,
}
