//! Sparse signal detection in linear regression: estimators, tests, rates,
//! and divergence lower-bound machinery.
//!
//! The model is
//!
//! ```text
//! Y = X θ + σ ξ,    X ∈ R^{n×p} random,  ξ ~ N(0, I_n) independent of X,
//! ```
//!
//! with θ an s-sparse parameter. Everything in this crate revolves around two
//! questions about ‖θ‖₂:
//!
//! * estimation — the thresholded quadratic-functional estimator Q̂ of ‖θ‖₂²
//!   and the norm estimator N̂ = √max(Q̂, 0) ([`estimator`]);
//! * testing — the detector Δ* = 1{N̂ > Aλ/2} for H₀: θ = 0 against s-sparse
//!   alternatives with ‖θ‖₂ ≥ τ, together with the rate functions ψ and λ on
//!   which its guarantees are phrased, and Monte Carlo risk/MSE harnesses
//!   ([`detect`]);
//! * lower bounds — the uniform s-subset prior, χ²-divergence computations,
//!   and numerical verifiers for the supporting concentration and tail
//!   inequalities ([`bounds`]).
//!
//! [`model`] generates designs, sparse parameters, and full regression
//! samples under deterministic splittable seeding ([`seed`]); [`linalg`] and
//! [`special`] carry the dense linear algebra and scalar special functions
//! the statistics are built on.
//!
//! The crate is `no_std` (alloc required). All transcendental evaluation
//! routes through `libm`, so results are bit-identical across platforms;
//! every sampling path is a pure function of a [`seed::SeedToken`].

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]
// Frozen reference values are written with every digit of the decimal
// representation that pins the intended f64; rounding them would change
// which float the literal denotes.
#![allow(clippy::excessive_precision)]
// Guards are written `!(x > 0.0)` on purpose: unlike `x <= 0.0`, the negated
// form also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bounds;
pub mod detect;
pub mod estimator;
pub mod linalg;
pub mod model;
pub mod seed;
pub mod special;

use alloc::string::String;
use core::fmt;

/// Errors surfaced by estimator, detector, and bound computations.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter combination violates a documented precondition.
    InvalidConfig(String),
    /// Vector or matrix dimensions do not match.
    DimensionMismatch { expected: usize, got: usize },
    /// The smallest Cholesky pivot of XᵀX fell below 1e-10 times the largest;
    /// the design is numerically rank-deficient. For the supported design
    /// families this is a probability-zero event, so it signals misuse.
    SingularDesign { pivot_ratio: f64 },
    /// E[(χ²_d)^{-m}] requires d > 2m.
    MomentDoesNotExist { d: u32, m: u32 },
    /// The requested exponential moment E exp(⟨Xθ, Xθ′⟩/σ²) is infinite for
    /// the Gaussian design at these vectors.
    DivergentExponentialMoment { overlap: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::SingularDesign { pivot_ratio } => write!(
                f,
                "singular design: smallest Cholesky pivot ratio {pivot_ratio:.3e} below 1e-10"
            ),
            Error::MomentDoesNotExist { d, m } => {
                write!(f, "E[(chi2_{d})^-{m}] does not exist: requires d > 2m")
            }
            Error::DivergentExponentialMoment { overlap } => write!(
                f,
                "exponential design moment diverges: c + sqrt(ab) = {overlap:.6} >= 1"
            ),
        }
    }
}

impl core::error::Error for Error {}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}
