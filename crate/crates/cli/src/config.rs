//! Experiment configuration: JSON files in, validated parameter blocks out.
//!
//! Every command owns one config struct with documented defaults. Three
//! rules keep experiment grids reproducible and typo-proof:
//!
//! * unknown fields are rejected (a misspelled grid key is an error, not a
//!   silently ignored setting),
//! * missing fields are filled from the defaults below, so a config file
//!   only needs the fields it overrides (an empty object `{}` is valid),
//! * a config round-trips through JSON losslessly, and its canonical JSON
//!   form is hashed into every output file's metadata line.
//!
//! `schema_version` must equal [`SCHEMA_VERSION`]; bumping the schema is the
//! only sanctioned way to change the meaning of an existing field.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sparse_detect_core::model::{family_from_name, DesignFamily, DesignSpec, ProblemConfig};

use crate::RunError;

/// The only config schema this binary reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

/// Shared behaviour of all command configs: a command name for hashing,
/// a schema version, and grid validation.
pub trait CommandConfig: Serialize + DeserializeOwned + Default {
    /// Command name recorded in metadata and hashed with the config.
    const COMMAND: &'static str;

    /// Declared schema version of this config instance.
    fn schema_version(&self) -> u32;

    /// Checks grid and parameter sanity; messages become usage errors.
    fn validate(&self) -> Result<(), String>;

    /// Canonical JSON form (defaults filled, declaration field order);
    /// the grid hash in output metadata is computed over this string.
    fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config structs always serialize")
    }
}

/// Loads a command config from an optional path, falling back to defaults,
/// and validates it. All failures here are usage errors (exit code 2).
pub fn load<T: CommandConfig>(path: Option<&Path>) -> Result<T, RunError> {
    let cfg: T = match path {
        None => T::default(),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| {
                RunError::usage(format!("cannot read config {}: {e}", p.display()))
            })?;
            serde_json::from_str(&text).map_err(|e| {
                RunError::usage(format!("invalid config {}: {e}", p.display()))
            })?
        }
    };
    if cfg.schema_version() != SCHEMA_VERSION {
        return Err(RunError::usage(format!(
            "unsupported schema_version {} (this binary reads version {SCHEMA_VERSION})",
            cfg.schema_version()
        )));
    }
    cfg.validate().map_err(RunError::usage)?;
    Ok(cfg)
}

/// Parses a design family name into a `DesignSpec` carrying its
/// subgaussian constant.
pub fn design_spec(name: &str) -> Result<DesignSpec, String> {
    let family = family_from_name(name).map_err(|e| e.to_string())?;
    Ok(match family {
        DesignFamily::GaussianIid => DesignSpec::gaussian_iid(),
        DesignFamily::Rademacher => DesignSpec::rademacher(),
        DesignFamily::ScaledUniform => DesignSpec::scaled_uniform(),
    })
}

fn check_positive_grid(name: &str, grid: &[f64]) -> Result<(), String> {
    if grid.is_empty() {
        return Err(format!("{name} must not be empty"));
    }
    for &v in grid {
        if !(v > 0.0) || !v.is_finite() {
            return Err(format!("{name} entries must be finite and positive, got {v}"));
        }
    }
    Ok(())
}

/// Grid over (n, p, s, sigma) for the rate tabulation command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RatesConfig {
    pub schema_version: u32,
    /// Sample sizes; one output row per grid combination.
    pub n_grid: Vec<usize>,
    /// Ambient dimensions.
    pub p_grid: Vec<usize>,
    /// Sparsity levels; every s must satisfy s <= p for every p in the grid.
    pub s_grid: Vec<usize>,
    /// Noise levels; zero is allowed (all separation rates are then zero).
    pub sigma_grid: Vec<f64>,
}

impl Default for RatesConfig {
    fn default() -> Self {
        RatesConfig {
            schema_version: SCHEMA_VERSION,
            n_grid: vec![500],
            p_grid: vec![100],
            s_grid: vec![1, 2, 5, 10, 20],
            sigma_grid: vec![1.0],
        }
    }
}

impl CommandConfig for RatesConfig {
    const COMMAND: &'static str = "rates";

    fn schema_version(&self) -> u32 {
        self.schema_version
    }

    fn validate(&self) -> Result<(), String> {
        if self.n_grid.is_empty() || self.p_grid.is_empty() || self.s_grid.is_empty() {
            return Err("n_grid, p_grid, and s_grid must not be empty".into());
        }
        if self.sigma_grid.is_empty() {
            return Err("sigma_grid must not be empty".into());
        }
        if self.n_grid.contains(&0) || self.p_grid.contains(&0) || self.s_grid.contains(&0) {
            return Err("n, p, and s grid entries must be positive".into());
        }
        let p_min = *self.p_grid.iter().min().expect("non-empty");
        if let Some(&s_bad) = self.s_grid.iter().find(|&&s| s > p_min) {
            return Err(format!("s = {s_bad} exceeds the smallest p = {p_min} in the grid"));
        }
        for &sigma in &self.sigma_grid {
            if !(sigma >= 0.0) || !sigma.is_finite() {
                return Err(format!("sigma grid entries must be finite and >= 0, got {sigma}"));
            }
        }
        Ok(())
    }
}

/// Parameters for the detection-risk curve command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RiskConfig {
    pub schema_version: u32,
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub sigma: f64,
    /// Design family name: gaussian_iid, rademacher, or scaled_uniform.
    pub design: String,
    /// Separation multipliers A; one output row per value.
    pub a_grid: Vec<f64>,
    /// Paired replicates per grid point (at least 100).
    pub replicates: usize,
    /// Alternative families evaluated at every A; the reported type-II
    /// error is the worst one over this list.
    pub alternatives: Vec<String>,
    /// The test rejects when the norm estimate exceeds
    /// threshold_factor * A * lambda.
    pub threshold_factor: f64,
    /// Optional fixed alternative separation. When absent, each grid point
    /// places alternatives on its own decision boundary, tau = A * lambda,
    /// which traces the full easy-to-hard risk transition. sigma = 0 makes
    /// that default boundary zero, so noiseless runs must set tau.
    pub tau: Option<f64>,
}

impl Default for RiskConfig {
    fn default() -> Self {
        RiskConfig {
            schema_version: SCHEMA_VERSION,
            n: 500,
            p: 100,
            s: 5,
            sigma: 1.0,
            design: "gaussian_iid".into(),
            a_grid: vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0],
            replicates: 500,
            alternatives: vec!["prior_draws".into()],
            threshold_factor: 0.5,
            tau: None,
        }
    }
}

impl RiskConfig {
    /// Builds the validated core problem description.
    pub fn problem(&self) -> Result<ProblemConfig, String> {
        let design = design_spec(&self.design)?;
        ProblemConfig::new(self.n, self.p, self.s, self.sigma, design).map_err(|e| e.to_string())
    }
}

impl CommandConfig for RiskConfig {
    const COMMAND: &'static str = "risk";

    fn schema_version(&self) -> u32 {
        self.schema_version
    }

    fn validate(&self) -> Result<(), String> {
        self.problem()?;
        check_positive_grid("a_grid", &self.a_grid)?;
        if self.replicates < 100 {
            return Err("replicates must be at least 100".into());
        }
        if self.alternatives.is_empty() {
            return Err("alternatives must not be empty".into());
        }
        for name in &self.alternatives {
            crate::commands::risk::alternative_kind(name)?;
        }
        if !(self.threshold_factor > 0.0) || !self.threshold_factor.is_finite() {
            return Err("threshold_factor must be finite and positive".into());
        }
        match self.tau {
            Some(tau) if !(tau > 0.0) || !tau.is_finite() => {
                Err(format!("tau must be finite and positive, got {tau}"))
            }
            None if self.sigma == 0.0 => Err(
                "sigma = 0 makes the default boundary separation A * lambda zero; \
                 set an explicit tau"
                    .into(),
            ),
            _ => Ok(()),
        }
    }
}

/// Parameters for the norm-estimation mean-squared-error sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MseConfig {
    pub schema_version: u32,
    pub n: usize,
    pub p: usize,
    pub sigma: f64,
    /// Design family name: gaussian_iid, rademacher, or scaled_uniform.
    pub design: String,
    /// Sparsity levels; one output row per value, each must satisfy s <= p.
    pub s_grid: Vec<usize>,
    /// Replicates per sparsity level (at least 100).
    pub replicates: usize,
    /// Name of the single alternative family the error is measured over.
    pub alternative: String,
    /// Norm of the measured parameters.
    pub tau: f64,
}

impl Default for MseConfig {
    fn default() -> Self {
        MseConfig {
            schema_version: SCHEMA_VERSION,
            n: 500,
            p: 100,
            sigma: 1.0,
            design: "gaussian_iid".into(),
            s_grid: vec![1, 2, 5, 10, 20],
            replicates: 2000,
            alternative: "equal_spread".into(),
            tau: 1.0,
        }
    }
}

impl CommandConfig for MseConfig {
    const COMMAND: &'static str = "mse";

    fn schema_version(&self) -> u32 {
        self.schema_version
    }

    fn validate(&self) -> Result<(), String> {
        design_spec(&self.design)?;
        if self.s_grid.is_empty() {
            return Err("s_grid must not be empty".into());
        }
        for &s in &self.s_grid {
            ProblemConfig::new(self.n, self.p, s, self.sigma, design_spec(&self.design)?)
                .map_err(|e| e.to_string())?;
        }
        if self.replicates < 100 {
            return Err("replicates must be at least 100".into());
        }
        crate::commands::risk::alternative_kind(&self.alternative)?;
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(format!("tau must be finite and positive, got {}", self.tau));
        }
        Ok(())
    }
}

/// Parameters for the divergence lower-bound experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LowerBoundConfig {
    pub schema_version: u32,
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub sigma: f64,
    /// Design family name: gaussian_iid, rademacher, or scaled_uniform.
    pub design: String,
    /// Separation multipliers A; the prior radius at each A is the
    /// calibrated separation radius. Zero is allowed (exact zero row).
    pub a_grid: Vec<f64>,
    /// Parameter pairs drawn from the prior (at least 100).
    pub pair_samples: usize,
    /// Fresh designs averaged per pair (at least 100).
    pub design_samples: usize,
}

impl Default for LowerBoundConfig {
    fn default() -> Self {
        LowerBoundConfig {
            schema_version: SCHEMA_VERSION,
            n: 20,
            p: 10,
            s: 2,
            sigma: 1.0,
            design: "gaussian_iid".into(),
            a_grid: vec![0.1, 0.25, 0.5, 0.75, 0.9],
            pair_samples: 2000,
            design_samples: 2000,
        }
    }
}

impl LowerBoundConfig {
    /// Builds the validated core problem description.
    pub fn problem(&self) -> Result<ProblemConfig, String> {
        let design = design_spec(&self.design)?;
        ProblemConfig::new(self.n, self.p, self.s, self.sigma, design).map_err(|e| e.to_string())
    }
}

impl CommandConfig for LowerBoundConfig {
    const COMMAND: &'static str = "lower-bound";

    fn schema_version(&self) -> u32 {
        self.schema_version
    }

    fn validate(&self) -> Result<(), String> {
        self.problem()?;
        if self.a_grid.is_empty() {
            return Err("a_grid must not be empty".into());
        }
        for &a in &self.a_grid {
            if !(a >= 0.0) || !a.is_finite() {
                return Err(format!("a_grid entries must be finite and >= 0, got {a}"));
            }
        }
        if self.a_grid.iter().any(|&a| a > 0.0) && self.sigma == 0.0 {
            return Err("sigma = 0 collapses every positive-A radius to zero; \
                        use sigma > 0 or an all-zero a_grid"
                .into());
        }
        if self.pair_samples < 100 || self.design_samples < 100 {
            return Err("pair_samples and design_samples must be at least 100".into());
        }
        Ok(())
    }
}

/// One (n, p, t) point of the smallest-eigenvalue concentration grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenPoint {
    pub n: usize,
    pub p: usize,
    pub t: f64,
}

/// Grids for the inequality-verification report.
///
/// Each field group drives one verifier family; the defaults reproduce the
/// reference report. Grids live in the config (not in code) so a frozen
/// config file pins a reproducible verification run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyLemmasConfig {
    pub schema_version: u32,
    /// Tail-bound grid: x = tail_x_start + k * tail_x_step for
    /// k = 0 .. tail_x_count - 1.
    pub tail_x_start: f64,
    pub tail_x_step: f64,
    pub tail_x_count: usize,
    /// Conditional second-moment window points (each must be >= 1).
    pub window_x_grid: Vec<f64>,
    /// Inverse-moment orders: all (d, m) pairs with d > 2m are checked.
    pub inverse_moment_d_grid: Vec<u32>,
    pub inverse_moment_m_grid: Vec<u32>,
    /// Number of seeded designs for the inverse-Gram/distance identity,
    /// spread over n in [30, 100] and p in [5, 20].
    pub identity_pairs: usize,
    /// Smallest-eigenvalue concentration grid and replicates per point.
    pub eigen_grid: Vec<EigenPoint>,
    pub eigen_replicates: usize,
    /// Truncated-correlation grid (rho in (0,1), x >= 1) and sample count.
    pub correlation_rho_grid: Vec<f64>,
    pub correlation_x_grid: Vec<f64>,
    pub correlation_samples: usize,
    /// Inner-product concentration deviation grid at one sample size.
    pub concentration_x_grid: Vec<f64>,
    pub concentration_n: usize,
    pub concentration_replicates: usize,
}

impl Default for VerifyLemmasConfig {
    fn default() -> Self {
        VerifyLemmasConfig {
            schema_version: SCHEMA_VERSION,
            tail_x_start: 0.05,
            tail_x_step: 0.05,
            tail_x_count: 200,
            window_x_grid: vec![1.0, 1.5, 2.0, 3.0, 5.0, 10.0, 20.0, 30.0],
            inverse_moment_d_grid: vec![9, 12, 20, 50],
            inverse_moment_m_grid: vec![1, 2, 3, 4],
            identity_pairs: 20,
            eigen_grid: vec![
                EigenPoint { n: 100, p: 10, t: 4.0 },
                EigenPoint { n: 200, p: 20, t: 2.0 },
                EigenPoint { n: 50, p: 50, t: 0.1 },
            ],
            eigen_replicates: 2000,
            correlation_rho_grid: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
            correlation_x_grid: vec![1.0, 1.5, 2.0, 2.5, 3.0],
            correlation_samples: 200_000,
            concentration_x_grid: vec![2.0, 4.0, 8.0, 16.0, 32.0],
            concentration_n: 20,
            concentration_replicates: 2000,
        }
    }
}

impl CommandConfig for VerifyLemmasConfig {
    const COMMAND: &'static str = "verify-lemmas";

    fn schema_version(&self) -> u32 {
        self.schema_version
    }

    fn validate(&self) -> Result<(), String> {
        if !(self.tail_x_start > 0.0) || !(self.tail_x_step > 0.0) || self.tail_x_count == 0 {
            return Err("tail grid requires positive start, positive step, and count >= 1".into());
        }
        check_positive_grid("window_x_grid", &self.window_x_grid)?;
        if let Some(&x) = self.window_x_grid.iter().find(|&&x| x < 1.0) {
            return Err(format!("window_x_grid entries must be >= 1, got {x}"));
        }
        if self.inverse_moment_d_grid.is_empty() || self.inverse_moment_m_grid.is_empty() {
            return Err("inverse moment grids must not be empty".into());
        }
        if self.inverse_moment_d_grid.contains(&0) || self.inverse_moment_m_grid.contains(&0) {
            return Err("inverse moment orders must be positive".into());
        }
        if self.identity_pairs == 0 {
            return Err("identity_pairs must be at least 1".into());
        }
        if self.eigen_grid.is_empty() {
            return Err("eigen_grid must not be empty".into());
        }
        for pt in &self.eigen_grid {
            if pt.p == 0 || pt.p > pt.n {
                return Err(format!(
                    "eigen grid point requires 1 <= p <= n, got n = {}, p = {}",
                    pt.n, pt.p
                ));
            }
            if !(pt.t > 0.0) || !pt.t.is_finite() {
                return Err(format!("eigen grid t must be finite and positive, got {}", pt.t));
            }
        }
        if self.eigen_replicates < 100 {
            return Err("eigen_replicates must be at least 100".into());
        }
        check_positive_grid("correlation_rho_grid", &self.correlation_rho_grid)?;
        if let Some(&rho) = self.correlation_rho_grid.iter().find(|&&r| r >= 1.0) {
            return Err(format!("correlation_rho_grid entries must lie in (0, 1), got {rho}"));
        }
        check_positive_grid("correlation_x_grid", &self.correlation_x_grid)?;
        if let Some(&x) = self.correlation_x_grid.iter().find(|&&x| x < 1.0) {
            return Err(format!("correlation_x_grid entries must be >= 1, got {x}"));
        }
        if self.correlation_samples < 100 {
            return Err("correlation_samples must be at least 100".into());
        }
        check_positive_grid("concentration_x_grid", &self.concentration_x_grid)?;
        if self.concentration_n == 0 {
            return Err("concentration_n must be at least 1".into());
        }
        if self.concentration_replicates < 100 {
            return Err("concentration_replicates must be at least 100".into());
        }
        Ok(())
    }
}
