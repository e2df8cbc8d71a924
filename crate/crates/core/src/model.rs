//! Problem configuration, design-matrix sampling, sparse parameters, and the
//! hard-instance prior.
//!
//! The observation model is
//!
//! ```text
//! Y = X θ + σ ξ,    X ∈ R^{n×p},  ξ ~ N(0, I_n),  X ⟂ ξ,
//! ```
//!
//! with θ s-sparse. Three isotropic subgaussian design families are shipped:
//! independent standard Gaussian entries, independent ±1 entries, and
//! independent entries uniform on [−√3, √3]. All have E[XᵀX]/n = I.
//!
//! The hard-instance prior draws a uniformly random size-s support and puts
//! the value τ/√s on every chosen coordinate, so each draw is exactly
//! s-sparse with ℓ₂ norm τ.
//!
//! Everything is a pure function of its seed token; see [`crate::seed`].

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use libm::sqrt;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::linalg::Mat;
use crate::seed::SeedToken;
use crate::{invalid, Error, Result};

/// Row distribution of the design matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DesignFamily {
    /// Independent N(0,1) entries.
    GaussianIid,
    /// Independent ±1 entries (probability 1/2 each).
    Rademacher,
    /// Independent entries uniform on [−√3, √3] (unit variance).
    ScaledUniform,
}

/// Design family together with its subgaussian constant σ_X.
///
/// Every family is isotropic (the expectation of XᵀX/n is the identity); the
/// constant is the smallest b with E exp(t·ζ) ≤ exp(b²t²/2) for entries ζ,
/// which is 1 for the Gaussian and sign families and √3 for the scaled
/// uniform family (bounded support [−√3, √3]).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DesignSpec {
    pub family: DesignFamily,
    pub sigma_x: f64,
}

impl DesignSpec {
    /// Independent standard Gaussian entries, σ_X = 1.
    pub fn gaussian_iid() -> Self {
        DesignSpec { family: DesignFamily::GaussianIid, sigma_x: 1.0 }
    }

    /// Independent ±1 entries, σ_X = 1.
    pub fn rademacher() -> Self {
        DesignSpec { family: DesignFamily::Rademacher, sigma_x: 1.0 }
    }

    /// Independent Uniform[−√3, √3] entries, σ_X = √3.
    pub fn scaled_uniform() -> Self {
        DesignSpec { family: DesignFamily::ScaledUniform, sigma_x: sqrt(3.0) }
    }
}

/// Dimensions, sparsity, noise level, and design family for one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemConfig {
    /// Sample size n (number of design rows).
    pub n: usize,
    /// Ambient dimension p.
    pub p: usize,
    /// Sparsity level s.
    pub s: usize,
    /// Noise standard deviation σ; zero is permitted for exactness tests.
    pub sigma: f64,
    /// Design family.
    pub design: DesignSpec,
    /// Aspect-ratio constant γ used by the estimator's validity condition.
    pub gamma: f64,
}

impl ProblemConfig {
    /// Builds a validated configuration with the default γ = 0.9.
    pub fn new(n: usize, p: usize, s: usize, sigma: f64, design: DesignSpec) -> Result<Self> {
        let cfg = ProblemConfig { n, p, s, sigma, design, gamma: 0.9 };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks the structural invariants; estimator-specific requirements
    /// (such as p < n) are enforced by the consumers that need them.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(invalid("n and p must be positive"));
        }
        if self.s == 0 || self.s > self.p {
            return Err(invalid("sparsity must satisfy 1 <= s <= p"));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(invalid("sigma must be finite and nonnegative"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(invalid("gamma must lie in (0, 1)"));
        }
        if !(self.design.sigma_x > 0.0) {
            return Err(invalid("sigma_x must be positive"));
        }
        Ok(())
    }

    /// Whether the estimator's mean-squared-error guarantee applies:
    /// n ≥ 9 and p ≤ min(γ·n, n − 8).
    ///
    /// Reported as a flag, never enforced: the estimator is well defined
    /// whenever p < n and the design is full rank.
    pub fn theorem_conditions_met(&self) -> bool {
        self.n >= 9 && (self.p as f64) <= self.gamma * (self.n as f64) && self.p <= self.n - 8
    }
}

/// Sparse vector stored as a sorted support plus values on the support.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseVector {
    dim: usize,
    support: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVector {
    /// Builds a sparse vector; the support must be strictly increasing and
    /// within bounds, with one value per support index.
    pub fn new(dim: usize, support: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if support.len() != values.len() {
            return Err(invalid("support and values must have equal length"));
        }
        for w in support.windows(2) {
            if w[0] >= w[1] {
                return Err(invalid("support indices must be strictly increasing"));
            }
        }
        if let Some(&last) = support.last() {
            if last >= dim {
                return Err(invalid("support index out of bounds"));
            }
        }
        Ok(SparseVector { dim, support, values })
    }

    /// The zero vector of the given dimension.
    pub fn zero(dim: usize) -> Self {
        SparseVector { dim, support: Vec::new(), values: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Sorted support indices.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Values on the support, in support order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of stored coordinates.
    pub fn l0_norm(&self) -> usize {
        self.support.len()
    }

    /// Euclidean norm.
    pub fn l2_norm(&self) -> f64 {
        sqrt(self.values.iter().map(|v| v * v).sum())
    }

    /// Dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (&i, &v) in self.support.iter().zip(&self.values) {
            out[i] = v;
        }
        out
    }

    /// Inner product with a dense vector of matching dimension.
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        debug_assert_eq!(dense.len(), self.dim);
        self.support
            .iter()
            .zip(&self.values)
            .map(|(&i, &v)| v * dense[i])
            .sum()
    }

    /// Inner product with another sparse vector (two-pointer merge).
    pub fn dot_sparse(&self, other: &SparseVector) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let mut acc = 0.0;
        let (mut a, mut b) = (0usize, 0usize);
        while a < self.support.len() && b < other.support.len() {
            match self.support[a].cmp(&other.support[b]) {
                core::cmp::Ordering::Less => a += 1,
                core::cmp::Ordering::Greater => b += 1,
                core::cmp::Ordering::Equal => {
                    acc += self.values[a] * other.values[b];
                    a += 1;
                    b += 1;
                }
            }
        }
        acc
    }
}

/// One realized draw of the regression model: design, response, parameter,
/// and the standard normal noise vector that produced the response.
#[derive(Clone, Debug)]
pub struct RegressionSample {
    pub x: Mat,
    pub y: Vec<f64>,
    pub theta: SparseVector,
    pub xi: Vec<f64>,
}

/// Parameters of the hard-instance prior: uniform size-s support, all
/// values τ/√s.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriorSpec {
    pub p: usize,
    pub s: usize,
    /// Separation radius τ ≥ 0. Zero is permitted so divergence experiments
    /// can exercise their degenerate short-circuit; draws then equal the
    /// zero vector on a random support.
    pub tau: f64,
}

impl PriorSpec {
    pub fn new(p: usize, s: usize, tau: f64) -> Result<Self> {
        if s == 0 || s > p {
            return Err(invalid("prior requires 1 <= s <= p"));
        }
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(invalid("prior requires finite tau >= 0"));
        }
        Ok(PriorSpec { p, s, tau })
    }
}

/// Draws an n×p design from the configured family, row-major, from a single
/// stream; identical (cfg, seed) give bitwise-identical matrices.
pub fn generate_design(cfg: &ProblemConfig, seed: SeedToken) -> Mat {
    let mut rng = seed.rng();
    let n = cfg.n;
    let p = cfg.p;
    let mut data = Vec::with_capacity(n * p);
    match cfg.design.family {
        DesignFamily::GaussianIid => {
            for _ in 0..n * p {
                data.push(StandardNormal.sample(&mut rng));
            }
        }
        DesignFamily::Rademacher => {
            for _ in 0..n * p {
                data.push(if rng.gen::<bool>() { 1.0 } else { -1.0 });
            }
        }
        DesignFamily::ScaledUniform => {
            let half = sqrt(3.0);
            let u = Uniform::new(-half, half);
            for _ in 0..n * p {
                data.push(u.sample(&mut rng));
            }
        }
    }
    Mat::from_rows(n, p, data)
}

/// Draws θ from the hard-instance prior: support uniform over the C(p,s)
/// size-s subsets (partial Fisher–Yates shuffle), every value τ/√s.
pub fn sample_prior(prior: &PriorSpec, seed: SeedToken) -> SparseVector {
    let mut rng = seed.rng();
    let p = prior.p;
    let s = prior.s;
    let mut idx: Vec<usize> = (0..p).collect();
    for k in 0..s {
        let j = rng.gen_range(k..p);
        idx.swap(k, j);
    }
    let mut support: Vec<usize> = idx[..s].to_vec();
    support.sort_unstable();
    let value = prior.tau / sqrt(s as f64);
    let values = vec![value; s];
    SparseVector { dim: p, support, values }
}

/// Draws a full regression sample: the design and the noise come from the
/// independent child streams "design" and "noise" of the given seed, then
/// y = Xθ + σξ.
pub fn sample_regression(
    cfg: &ProblemConfig,
    theta: &SparseVector,
    seed: SeedToken,
) -> Result<RegressionSample> {
    if theta.dim() != cfg.p {
        return Err(Error::DimensionMismatch { expected: cfg.p, got: theta.dim() });
    }
    let x = generate_design(cfg, seed.derive("design", 0));
    let mut noise_rng = seed.derive("noise", 0).rng();
    let xi: Vec<f64> = (0..cfg.n)
        .map(|_| StandardNormal.sample(&mut noise_rng))
        .collect();
    let y: Vec<f64> = (0..cfg.n)
        .map(|r| theta.dot_dense(x.row(r)) + cfg.sigma * xi[r])
        .collect();
    Ok(RegressionSample { x, y, theta: theta.clone(), xi })
}

/// Human-readable family name, used in reports.
pub fn family_name(family: DesignFamily) -> &'static str {
    match family {
        DesignFamily::GaussianIid => "gaussian_iid",
        DesignFamily::Rademacher => "rademacher",
        DesignFamily::ScaledUniform => "scaled_uniform",
    }
}

/// Parses a family name as written by [`family_name`].
pub fn family_from_name(name: &str) -> Result<DesignFamily> {
    match name {
        "gaussian_iid" => Ok(DesignFamily::GaussianIid),
        "rademacher" => Ok(DesignFamily::Rademacher),
        "scaled_uniform" => Ok(DesignFamily::ScaledUniform),
        other => {
            let mut msg = String::from("unknown design family: ");
            msg.push_str(other);
            Err(Error::InvalidConfig(msg))
        }
    }
}
