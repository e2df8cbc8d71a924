//! Separation rates, the detection test, and Monte Carlo risk and
//! mean-squared-error harnesses.
//!
//! The detection problem distinguishes θ = 0 from the alternative class
//! Θ(s,τ) = {θ : ‖θ‖₀ ≤ s, ‖θ‖₂ ≥ τ}. Its difficulty is governed by the
//! squared-rate function
//!
//! ```text
//! ψ(s,p) = s·log(1 + p/s²)/n   if s² < p,
//!          √p/n                 if s² ≥ p,
//! ```
//!
//! and the test rejects when the norm estimate clears a multiple of the
//! separation rate λ:
//!
//! ```text
//! Δ = 1{ N̂ > A·λ/2 }   (strict inequality; the factor 1/2 is configurable).
//! ```
//!
//! [`rate_bundle`] evaluates every printed variant of λ so they can be
//! compared on a grid: the three-term minimum with and without the n^{-1/4}
//! term, the piecewise form σ·√ψ, the compact form
//! σ·√(s·log(1+√p/s)/n), and the classical log p reference rate.
//!
//! The Monte Carlo harnesses estimate the total risk (type-I error plus the
//! worst type-II error over an alternative family) and the mean squared
//! error of N̂, with deterministic per-replicate seed streams so parallel
//! and serial execution agree exactly.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use libm::{pow, sqrt};

use crate::estimator::{alpha_s, least_squares, q_hat_with_alpha, EstimateResult};
use crate::model::{sample_prior, sample_regression, PriorSpec, ProblemConfig, SparseVector};
use crate::seed::SeedToken;
use crate::special::{ln, ln_1p};
use crate::{invalid, Result};

/// Squared-rate function ψ(s,p) at sample size n.
///
/// The branch is chosen by the exact integer comparison s² ≥ p.
pub fn psi(s: usize, p: usize, n: usize) -> Result<f64> {
    if s == 0 || s > p {
        return Err(invalid("psi requires 1 <= s <= p"));
    }
    if n == 0 {
        return Err(invalid("psi requires n >= 1"));
    }
    let nf = n as f64;
    if (s as u128) * (s as u128) >= p as u128 {
        Ok(sqrt(p as f64) / nf)
    } else {
        let sf = s as f64;
        Ok(sf * ln_1p(p as f64 / (sf * sf)) / nf)
    }
}

/// Every printed variant of the separation rate λ, all linear in σ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateBundle {
    /// ψ(s,p): squared rate, σ-free.
    pub psi: f64,
    /// σ·min(√(s·log(2+p/s²)/n), n^{-1/4}, p^{1/4}/√n).
    pub lambda_eq5: f64,
    /// σ·min(√(s·log(2+p/s²)/n), p^{1/4}/√n): the p < n form without the
    /// n^{-1/4} term.
    pub lambda_eq5a: f64,
    /// σ·√ψ(s,p): the piecewise rate used by the test.
    pub lambda_eq6: f64,
    /// σ·√(s·log(1+√p/s)/n): compact single-formula equivalent.
    pub lambda_compact: f64,
    /// σ·min(√(s·log(p)/n), n^{-1/4}, p^{1/4}/√n): classical reference rate
    /// with the log p factor.
    pub lambda_itv: f64,
}

/// Evaluates all rate variants for a configuration.
///
/// Every λ multiplies σ last, so scaling σ scales each entry exactly
/// linearly (bitwise for power-of-two factors).
pub fn rate_bundle(cfg: &ProblemConfig) -> Result<RateBundle> {
    let (n, p, s) = (cfg.n, cfg.p, cfg.s);
    let psi_val = psi(s, p, n)?;
    let nf = n as f64;
    let pf = p as f64;
    let sf = s as f64;
    let sigma = cfg.sigma;

    let sparse_eq5 = sqrt(sf * ln(2.0 + pf / (sf * sf)) / nf);
    let quarter_n = pow(nf, -0.25);
    let quarter_p = pow(pf, 0.25) / sqrt(nf);

    let lambda_eq5 = sigma * sparse_eq5.min(quarter_n).min(quarter_p);
    let lambda_eq5a = sigma * sparse_eq5.min(quarter_p);
    let lambda_eq6 = sigma * sqrt(psi_val);
    let lambda_compact = sigma * sqrt(sf * ln_1p(sqrt(pf) / sf) / nf);
    let lambda_itv = sigma * sqrt(sf * ln(pf) / nf).min(quarter_n).min(quarter_p);

    Ok(RateBundle { psi: psi_val, lambda_eq5, lambda_eq5a, lambda_eq6, lambda_compact, lambda_itv })
}

/// Separation radius at which the lower-bound prior is calibrated:
///
/// ```text
/// τ(A) = A·σ·min( √(s·log(1 + p/s²)/n), n^{-1/4} ).
/// ```
///
/// The divergence bound chain is stated for unit noise; the σ factor makes
/// the radius scale with the noise level like every other rate here.
pub fn separation_radius(a: f64, s: usize, p: usize, n: usize, sigma: f64) -> f64 {
    let (nf, pf, sf) = (n as f64, p as f64, s as f64);
    let first = sqrt(sf * ln_1p(pf / (sf * sf)) / nf);
    a * sigma * first.min(pow(nf, -0.25))
}

/// The detection test with the default threshold factor 1/2: rejects
/// (returns true) iff N̂ > A·λ/2, strictly.
pub fn run_test(result: &EstimateResult, lambda: f64, a: f64) -> bool {
    run_test_with_factor(result, lambda, a, 0.5)
}

/// The detection test with an explicit threshold factor: rejects iff
/// N̂ > factor·A·λ, strictly. Whether 1/2 is the best factor is an open
/// tuning question, so it stays configurable.
pub fn run_test_with_factor(result: &EstimateResult, lambda: f64, a: f64, factor: f64) -> bool {
    debug_assert!(lambda >= 0.0 && a > 0.0 && factor > 0.0);
    result.n_hat > factor * a * lambda
}

/// How alternative parameters are produced in the risk harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlternativeKind {
    /// Fresh draw from the hard-instance prior each replicate.
    PriorDraws,
    /// Fixed vector with s entries equal to τ/√s on the first s coordinates.
    EqualSpread,
    /// Fixed vector with a single entry equal to τ.
    SingleSpike,
}

/// An alternative family inside Θ(s,τ): a kind plus the separation radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlternativeFamily {
    kind: AlternativeKind,
    tau: f64,
}

impl AlternativeFamily {
    /// Builds a family; τ must be strictly positive and finite, since the
    /// alternative class Θ(s,τ) is empty of meaning at τ ≤ 0.
    pub fn new(kind: AlternativeKind, tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(invalid("alternative family requires finite tau > 0"));
        }
        Ok(AlternativeFamily { kind, tau })
    }

    pub fn kind(&self) -> AlternativeKind {
        self.kind
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Human-readable descriptor for reports.
    pub fn describe(&self) -> String {
        let name = match self.kind {
            AlternativeKind::PriorDraws => "prior_draws",
            AlternativeKind::EqualSpread => "equal_spread",
            AlternativeKind::SingleSpike => "single_spike",
        };
        format!("{name}(tau={})", self.tau)
    }

    /// The parameter for one replicate. Fixed kinds ignore the seed; the
    /// prior kind draws fresh from the "risk-prior" stream.
    pub fn theta_for_replicate(
        &self,
        p: usize,
        s: usize,
        seed: SeedToken,
        replicate: u64,
    ) -> Result<SparseVector> {
        match self.kind {
            AlternativeKind::PriorDraws => {
                let prior = PriorSpec::new(p, s, self.tau)?;
                Ok(sample_prior(&prior, seed.derive("risk-prior", replicate)))
            }
            AlternativeKind::EqualSpread => {
                let value = self.tau / sqrt(s as f64);
                SparseVector::new(p, (0..s).collect(), vec![value; s])
            }
            AlternativeKind::SingleSpike => SparseVector::new(p, vec![0], vec![self.tau]),
        }
    }
}

/// Outcome of one paired risk replicate: the null arm's rejection and the
/// alternative arm's acceptance.
#[derive(Clone, Copy, Debug)]
pub struct RiskReplicate {
    pub false_alarm: bool,
    pub miss: bool,
}

/// Runs one paired replicate: a θ = 0 sample on the "risk-null" stream and
/// one alternative sample on the "risk-alt" stream, both tested at
/// threshold factor·A·λ. Pure in (inputs, seed, replicate); callers may run
/// replicates in any order or in parallel.
#[allow(clippy::too_many_arguments)]
pub fn risk_replicate(
    cfg: &ProblemConfig,
    family: &AlternativeFamily,
    a: f64,
    lambda: f64,
    alpha: f64,
    factor: f64,
    seed: SeedToken,
    replicate: u64,
) -> Result<RiskReplicate> {
    let null_sample = sample_regression(
        cfg,
        &SparseVector::zero(cfg.p),
        seed.derive("risk-null", replicate),
    )?;
    let null_ctx = least_squares(&null_sample.x, &null_sample.y)?;
    let false_alarm =
        run_test_with_factor(&q_hat_with_alpha(&null_ctx, cfg, alpha), lambda, a, factor);

    let theta = family.theta_for_replicate(cfg.p, cfg.s, seed, replicate)?;
    let alt_sample = sample_regression(cfg, &theta, seed.derive("risk-alt", replicate))?;
    let alt_ctx = least_squares(&alt_sample.x, &alt_sample.y)?;
    let miss = !run_test_with_factor(&q_hat_with_alpha(&alt_ctx, cfg, alpha), lambda, a, factor);

    Ok(RiskReplicate { false_alarm, miss })
}

/// Monte Carlo estimate of the total detection risk.
#[derive(Clone, Debug, PartialEq)]
pub struct RiskEstimate {
    /// Fraction of null replicates rejected.
    pub type1: f64,
    /// Worst fraction of missed alternatives over the family.
    pub type2_worst: f64,
    /// type1 + type2_worst; lies in [0, 2].
    pub total: f64,
    /// 95% half-width for `total` (normal approximation over the two
    /// independent arms, floored at 1/replicates).
    pub half_width: f64,
    pub replicates: usize,
    /// Descriptor of the alternative family evaluated.
    pub alternative_family: String,
}

/// Aggregates replicate outcomes into a [`RiskEstimate`]. Counting is
/// order-insensitive, so any parallel schedule over replicates yields a
/// bitwise-identical summary.
pub fn summarize_risk(
    outcomes: &[RiskReplicate],
    family: &AlternativeFamily,
) -> RiskEstimate {
    let r = outcomes.len();
    assert!(r > 0, "cannot summarize zero replicates");
    let alarms = outcomes.iter().filter(|o| o.false_alarm).count();
    let misses = outcomes.iter().filter(|o| o.miss).count();
    let rf = r as f64;
    let type1 = alarms as f64 / rf;
    let type2 = misses as f64 / rf;
    let var = (type1 * (1.0 - type1) + type2 * (1.0 - type2)) / rf;
    let half_width = (1.96 * sqrt(var)).max(1.0 / rf);
    RiskEstimate {
        type1,
        type2_worst: type2,
        total: type1 + type2,
        half_width,
        replicates: r,
        alternative_family: family.describe(),
    }
}

/// Estimates the total risk of the test at threshold A·λ/2 with λ taken as
/// the piecewise rate σ·√ψ, over `replicates` paired replicates.
pub fn estimate_risk(
    cfg: &ProblemConfig,
    family: &AlternativeFamily,
    a: f64,
    replicates: usize,
    seed: SeedToken,
) -> Result<RiskEstimate> {
    estimate_risk_with_factor(cfg, family, a, replicates, seed, 0.5)
}

/// [`estimate_risk`] with an explicit threshold factor.
pub fn estimate_risk_with_factor(
    cfg: &ProblemConfig,
    family: &AlternativeFamily,
    a: f64,
    replicates: usize,
    seed: SeedToken,
    factor: f64,
) -> Result<RiskEstimate> {
    if replicates < 100 {
        return Err(invalid("risk estimation requires at least 100 replicates"));
    }
    if !(a > 0.0) {
        return Err(invalid("risk estimation requires A > 0"));
    }
    cfg.validate()?;
    let lambda = rate_bundle(cfg)?.lambda_eq6;
    let alpha = alpha_s(cfg.s, cfg.p);
    let mut outcomes = Vec::with_capacity(replicates);
    for r in 0..replicates {
        outcomes.push(risk_replicate(cfg, family, a, lambda, alpha, factor, seed, r as u64)?);
    }
    Ok(summarize_risk(&outcomes, family))
}

/// Monte Carlo estimate of E(N̂ − ‖θ‖₂)².
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MseEstimate {
    /// Mean squared error of the norm estimate.
    pub mse: f64,
    /// 95% half-width (normal approximation, floored at 1/replicates).
    pub half_width: f64,
    pub replicates: usize,
}

/// Squared error of one replicate: draw θ (fresh from the prior, or the
/// family's fixed member), sample the regression on the "mse-sample"
/// stream, and return (N̂ − ‖θ‖₂)².
pub fn mse_replicate(
    cfg: &ProblemConfig,
    family: &AlternativeFamily,
    alpha: f64,
    seed: SeedToken,
    replicate: u64,
) -> Result<f64> {
    let theta = family.theta_for_replicate(cfg.p, cfg.s, seed, replicate)?;
    let sample = sample_regression(cfg, &theta, seed.derive("mse-sample", replicate))?;
    let ctx = least_squares(&sample.x, &sample.y)?;
    let est = q_hat_with_alpha(&ctx, cfg, alpha);
    let err = est.n_hat - theta.l2_norm();
    Ok(err * err)
}

/// Aggregates per-replicate squared errors in index order (the order must
/// be fixed for bitwise reproducibility of the floating-point sums).
pub fn summarize_mse(squared_errors: &[f64]) -> MseEstimate {
    let r = squared_errors.len();
    assert!(r > 0, "cannot summarize zero replicates");
    let rf = r as f64;
    let mean = squared_errors.iter().sum::<f64>() / rf;
    let var = squared_errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / rf;
    let half_width = (1.96 * sqrt(var / rf)).max(1.0 / rf);
    MseEstimate { mse: mean, half_width, replicates: r }
}

/// Estimates the mean squared error of N̂ over the family.
pub fn estimate_norm_mse(
    cfg: &ProblemConfig,
    family: &AlternativeFamily,
    replicates: usize,
    seed: SeedToken,
) -> Result<MseEstimate> {
    if replicates < 100 {
        return Err(invalid("mse estimation requires at least 100 replicates"));
    }
    cfg.validate()?;
    let alpha = alpha_s(cfg.s, cfg.p);
    let mut errors = Vec::with_capacity(replicates);
    for r in 0..replicates {
        errors.push(mse_replicate(cfg, family, alpha, seed, r as u64)?);
    }
    Ok(summarize_mse(&errors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::Regime;
    use crate::model::DesignSpec;
    use libm::fabs;
    use proptest::prelude::*;

    fn cfg(n: usize, p: usize, s: usize, sigma: f64) -> ProblemConfig {
        ProblemConfig::new(n, p, s, sigma, DesignSpec::gaussian_iid()).unwrap()
    }

    #[test]
    fn psi_matches_frozen_references() {
        // High-precision references computed independently.
        assert_eq!(psi(1, 1, 100).unwrap(), 0.01, "boundary s = p = 1 is the dense branch");
        assert_eq!(psi(10, 100, 50).unwrap(), 0.2, "s = sqrt(p) goes dense");
        let sparse = psi(2, 100, 1000).unwrap();
        assert!(
            fabs(sparse - 6.5161930760429644e-3) <= 1e-15,
            "psi(2,100,1000) = {sparse}"
        );
        let table = [
            (1usize, 9.2302410336825187e-3),
            (2, 1.3032386152085929e-2),
            (5, 1.6094379124341002e-2),
            (10, 0.02),
            (20, 0.02),
        ];
        for (s, want) in table {
            let got = psi(s, 100, 500).unwrap();
            assert!(fabs(got - want) <= 1e-15 * want.max(1.0), "psi({s},100,500) = {got}");
        }
    }

    #[test]
    fn psi_rejects_invalid_sparsity() {
        assert!(psi(0, 5, 10).is_err());
        assert!(psi(6, 5, 10).is_err());
        assert!(psi(1, 5, 0).is_err());
    }

    #[test]
    fn rate_bundle_matches_frozen_single_point() {
        // n=100, p=1, s=1, sigma=1.
        let b = rate_bundle(&cfg(100, 1, 1, 1.0)).unwrap();
        assert_eq!(b.psi, 0.01);
        assert_eq!(b.lambda_eq6, 0.1);
        assert_eq!(b.lambda_eq5, 0.1, "p^(1/4)/sqrt(n) term is binding");
        assert_eq!(b.lambda_eq5a, 0.1);
        assert!(fabs(b.lambda_compact - 8.3255461115769772e-2) <= 1e-16);
        assert_eq!(b.lambda_itv, 0.0, "log p vanishes at p = 1");
    }

    #[test]
    fn rate_bundle_dense_boundary_value() {
        let b = rate_bundle(&cfg(100, 16, 4, 1.0)).unwrap();
        assert_eq!(b.lambda_eq6, 0.2, "sqrt(sqrt(16)/100)");
    }

    #[test]
    fn rates_scale_linearly_in_sigma() {
        let base = rate_bundle(&cfg(500, 100, 5, 1.0)).unwrap();
        let doubled = rate_bundle(&cfg(500, 100, 5, 2.0)).unwrap();
        // sigma multiplies last, so the power-of-two scaling is bitwise.
        assert_eq!(doubled.lambda_eq5, 2.0 * base.lambda_eq5);
        assert_eq!(doubled.lambda_eq5a, 2.0 * base.lambda_eq5a);
        assert_eq!(doubled.lambda_eq6, 2.0 * base.lambda_eq6);
        assert_eq!(doubled.lambda_compact, 2.0 * base.lambda_compact);
        assert_eq!(doubled.lambda_itv, 2.0 * base.lambda_itv);
        assert_eq!(doubled.psi, base.psi, "psi is sigma-free");
        let zero = rate_bundle(&cfg(500, 100, 5, 0.0)).unwrap();
        assert_eq!(zero.lambda_eq6, 0.0);
        assert_eq!(zero.lambda_eq5, 0.0);
    }

    #[test]
    fn eq5_never_exceeds_eq5a() {
        for n in [50usize, 200, 1000, 10_000] {
            for p in [1usize, 10, 100, 4096] {
                for s in [1usize, 2, 3, 5, 10] {
                    if s > p {
                        continue;
                    }
                    let b = rate_bundle(&cfg(n, p, s, 1.3)).unwrap();
                    assert!(
                        b.lambda_eq5 <= b.lambda_eq5a,
                        "extra min term must not increase the rate at ({n},{p},{s})"
                    );
                }
            }
        }
    }

    #[test]
    fn eq5a_and_compact_are_equivalent_up_to_constants() {
        // The two sparse-regime formulas agree to within a factor 4 over a
        // wide grid (empirically the ratio stays within [1.20, 1.42]).
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for p in [100usize, 10_000, 1_000_000] {
            let smax = sqrt(p as f64) as usize;
            let mut s = 1usize;
            while s <= smax {
                let b = rate_bundle(&cfg(1000, p, s, 1.0)).unwrap();
                if b.lambda_compact > 0.0 {
                    let ratio = b.lambda_eq5a / b.lambda_compact;
                    lo = lo.min(ratio);
                    hi = hi.max(ratio);
                }
                s = (s * 2).max(s + 1);
            }
        }
        assert!(lo >= 0.25 && hi <= 4.0, "ratio range [{lo}, {hi}] escapes [1/4, 4]");
        assert!(lo >= 1.20 && hi <= 1.42, "empirical band drifted: [{lo}, {hi}]");
    }

    #[test]
    fn sparse_rate_factor_monotonicity() {
        // The variant with log(2 + p/s^2) is nondecreasing in s on 1..sqrt(p).
        for p in [100usize, 10_000, 1_000_000] {
            let smax = sqrt(p as f64) as usize;
            let mut prev = 0.0;
            for s in 1..=smax {
                let sf = s as f64;
                let f = sf * ln(2.0 + p as f64 / (sf * sf));
                assert!(f >= prev, "log(2+.) variant decreased at s = {s}, p = {p}");
                prev = f;
            }
        }
        // The log(1 + p/s^2) variant is NOT monotone: at p = 100 it already
        // decreases from s = 5 to s = 6, so no test may assume otherwise.
        let f = |s: f64| s * ln_1p(100.0 / (s * s));
        assert!(
            f(5.0) > f(6.0),
            "expected the log1p variant to decrease between s=5 and s=6 at p=100"
        );
    }

    #[test]
    fn separation_radius_matches_frozen_value() {
        // A = 0.5, s = 2, p = 10, n = 20, sigma = 1.
        let tau = separation_radius(0.5, 2, 10, 20, 1.0);
        assert!(
            fabs(tau - 1.7697195883072606e-1) <= 1e-16,
            "separation radius drifted: {tau}"
        );
        // Linear in both A and sigma (power-of-two factors are exact).
        assert_eq!(separation_radius(1.0, 2, 10, 20, 1.0), 2.0 * tau);
        assert_eq!(separation_radius(0.5, 2, 10, 20, 2.0), 2.0 * tau);
    }

    fn estimate_with_norm(n_hat: f64) -> EstimateResult {
        EstimateResult {
            q_hat: n_hat * n_hat,
            n_hat,
            regime: Regime::Dense,
            alpha_s: 1.0,
            threshold_level: 1.0,
            selected: Vec::new(),
            theorem_conditions_met: true,
        }
    }

    #[test]
    fn test_decision_is_strict_at_the_boundary() {
        assert!(!run_test(&estimate_with_norm(0.0), 1.0, 1.0));
        // N = 1, lambda = 1, A = 2: boundary N = A*lambda/2 exactly; strict.
        assert!(!run_test(&estimate_with_norm(1.0), 1.0, 2.0));
        assert!(run_test(&estimate_with_norm(1.01), 1.0, 2.0));
    }

    proptest! {
        #[test]
        fn test_decision_invariant_under_exact_scaling(
            n_hat in 0.0f64..10.0,
            lambda in 0.0f64..10.0,
            a in 0.01f64..16.0,
            j in -20i32..21,
        ) {
            // Power-of-two scalings are exact in binary floating point, so
            // the decision must be bit-identical under them.
            let kappa = pow(2.0, j as f64);
            let before = run_test(&estimate_with_norm(n_hat), lambda, a);
            let after = run_test(&estimate_with_norm(kappa * n_hat), kappa * lambda, a);
            prop_assert_eq!(before, after);
        }

        #[test]
        fn test_decision_invariant_under_general_scaling_away_from_ties(
            n_hat in 0.0f64..10.0,
            lambda in 0.0f64..10.0,
            a in 0.01f64..16.0,
            kappa in 0.01f64..100.0,
        ) {
            // For arbitrary kappa, round-off can flip the comparison only
            // within a few ulps of the boundary; skip that sliver.
            let threshold = 0.5 * a * lambda;
            prop_assume!(fabs(n_hat - threshold) > 1e-9 * (n_hat + threshold));
            let before = run_test(&estimate_with_norm(n_hat), lambda, a);
            let after = run_test(&estimate_with_norm(kappa * n_hat), kappa * lambda, a);
            prop_assert_eq!(before, after);
        }
    }

    #[test]
    fn alternative_family_rejects_nonpositive_tau() {
        assert!(AlternativeFamily::new(AlternativeKind::PriorDraws, 0.0).is_err());
        assert!(AlternativeFamily::new(AlternativeKind::EqualSpread, -1.0).is_err());
        assert!(AlternativeFamily::new(AlternativeKind::SingleSpike, f64::NAN).is_err());
    }

    #[test]
    fn alternative_members_lie_in_the_class() {
        let seed = SeedToken::from_master(77);
        for kind in [
            AlternativeKind::PriorDraws,
            AlternativeKind::EqualSpread,
            AlternativeKind::SingleSpike,
        ] {
            let family = AlternativeFamily::new(kind, 0.7).unwrap();
            for r in 0..10 {
                let theta = family.theta_for_replicate(20, 3, seed, r).unwrap();
                assert!(theta.l0_norm() <= 3, "sparsity violated for {kind:?}");
                assert!(
                    fabs(theta.l2_norm() - 0.7) <= 1e-12,
                    "norm {} of {kind:?} member off tau",
                    theta.l2_norm()
                );
            }
        }
    }

    #[test]
    fn zero_noise_risk_is_zero() {
        let c = cfg(40, 8, 2, 0.0);
        let family = AlternativeFamily::new(AlternativeKind::PriorDraws, 0.5).unwrap();
        let risk = estimate_risk(&c, &family, 1.0, 100, SeedToken::from_master(5)).unwrap();
        assert_eq!(risk.type1, 0.0);
        assert_eq!(risk.type2_worst, 0.0);
        assert_eq!(risk.total, 0.0);
        assert_eq!(risk.replicates, 100);
        assert_eq!(risk.half_width, 0.01, "half-width floor 1/replicates");
    }

    #[test]
    fn zero_noise_mse_is_zero() {
        let c = cfg(40, 8, 2, 0.0);
        let family = AlternativeFamily::new(AlternativeKind::EqualSpread, 1.0).unwrap();
        let est = estimate_norm_mse(&c, &family, 100, SeedToken::from_master(6)).unwrap();
        assert!(est.mse <= 1e-16, "zero-noise mse should vanish, got {}", est.mse);
    }

    #[test]
    fn risk_estimation_is_deterministic() {
        let c = cfg(30, 5, 2, 1.0);
        let family = AlternativeFamily::new(AlternativeKind::PriorDraws, 0.8).unwrap();
        let seed = SeedToken::from_master(9);
        let a = estimate_risk(&c, &family, 2.0, 120, seed).unwrap();
        let b = estimate_risk(&c, &family, 2.0, 120, seed).unwrap();
        assert_eq!(a, b, "same seed must reproduce the risk estimate exactly");
    }

    #[test]
    fn risk_estimation_rejects_tiny_replicate_counts() {
        let c = cfg(30, 5, 2, 1.0);
        let family = AlternativeFamily::new(AlternativeKind::PriorDraws, 0.8).unwrap();
        assert!(estimate_risk(&c, &family, 1.0, 99, SeedToken::from_master(1)).is_err());
        assert!(estimate_norm_mse(&c, &family, 99, SeedToken::from_master(1)).is_err());
    }

    #[test]
    fn summaries_use_the_half_width_floor() {
        let outcomes = vec![RiskReplicate { false_alarm: false, miss: false }; 200];
        let family = AlternativeFamily::new(AlternativeKind::SingleSpike, 1.0).unwrap();
        let est = summarize_risk(&outcomes, &family);
        assert_eq!(est.half_width, 1.0 / 200.0);
        assert_eq!(est.alternative_family, "single_spike(tau=1)");
    }
}
