//! Scalar special functions for Gaussian tail arithmetic.
//!
//! The estimators and tail-bound verifiers need four ingredients:
//!
//! * the standard normal density φ, CDF Φ, and tails, all routed through
//!   `libm::erfc` so results are platform-independent;
//! * the scaled complementary error function erfcx(x) = e^{x²} erfc(x),
//!   which keeps the Mills hazard φ(x)/(1−Φ(x)) well-conditioned where
//!   erfc underflows;
//! * the truncated second moment α(x) = E(Z² | |Z| > x) of a standard
//!   normal, via the closed form α = 1 + x·φ(x)/(1−Φ(x));
//! * a small adaptive Simpson integrator used as an independent quadrature
//!   reference against the closed forms.
//!
//! Accuracy: φ/Φ/tails inherit erfc's ~2 ulp relative error where
//! representable; `erfcx` is verified to ≤ 1e-13 relative against an
//! independent oracle over [0, 100]; `conditional_second_moment` agrees with
//! adaptive quadrature to ≤ 1e-10 relative (tested).

use libm::{exp, erfc, fabs, log, sqrt};

/// 1/√(2π).
pub(crate) const FRAC_1_SQRT_2PI: f64 = 0.3989422804014326779;
/// √(2/π).
pub(crate) const SQRT_2_OVER_PI: f64 = 0.7978845608028653559;

/// Standard normal density φ(x).
pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * exp(-0.5 * x * x)
}

/// Standard normal CDF Φ(x).
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * core::f64::consts::FRAC_1_SQRT_2)
}

/// Upper tail 1 − Φ(x).
pub fn normal_tail(x: f64) -> f64 {
    0.5 * erfc(x * core::f64::consts::FRAC_1_SQRT_2)
}

/// Two-sided tail P(|Z| > x) for x ≥ 0.
pub fn two_sided_tail(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    erfc(x * core::f64::consts::FRAC_1_SQRT_2)
}

/// Scaled complementary error function e^{x²} erfc(x) for x ≥ 0.
///
/// Below x = 8 the direct product is exact to ~1e-13 (the e^{x²} factor
/// contributes at most x²·ε relative error). From x = 8 the asymptotic
/// expansion
///
/// ```text
/// erfcx(x) = 1/(x√π) · Σ_k (−1)^k (2k−1)!! / (2x²)^k
/// ```
///
/// reaches machine precision within 20 terms because 1/(2x²) ≤ 1/128.
pub fn erfcx(x: f64) -> f64 {
    assert!(x >= 0.0 && x.is_finite(), "erfcx domain is [0, inf)");
    if x < 8.0 {
        return exp(x * x) * erfc(x);
    }
    let inv2x2 = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=20u32 {
        term *= -((2 * k - 1) as f64) * inv2x2;
        sum += term;
        if fabs(term) < 1e-18 * fabs(sum) {
            break;
        }
    }
    sum / (x * sqrt(core::f64::consts::PI))
}

/// Mills hazard φ(x)/(1 − Φ(x)) for x ≥ 0, stable for arbitrarily large x.
pub fn mills_hazard(x: f64) -> f64 {
    SQRT_2_OVER_PI / erfcx(x * core::f64::consts::FRAC_1_SQRT_2)
}

/// Truncated second moment α(x) = E(Z² | |Z| > x) = 1 + x·φ(x)/(1 − Φ(x)).
///
/// α(0) = 1 (unconditional second moment); α(x) → x²⁺ as x → ∞.
pub fn conditional_second_moment(x: f64) -> f64 {
    assert!(x >= 0.0 && x.is_finite());
    if x == 0.0 {
        return 1.0;
    }
    1.0 + x * mills_hazard(x)
}

/// Natural log of (1 + x), delegating to libm for platform independence.
pub fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

/// Natural log, delegating to libm.
pub fn ln(x: f64) -> f64 {
    log(x)
}

/// Adaptive Simpson quadrature of `f` over [a, b] to absolute tolerance
/// `tol`.
///
/// Classic bisection scheme: a panel is accepted when the two-half Simpson
/// estimate differs from the single-panel one by at most 15·tol, with
/// Richardson correction applied. Recursion depth is capped at 60, which is
/// unreachable for the smooth integrands used here.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_panel(f, a, b, fa, fm, fb, whole, tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_panel<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || fabs(delta) <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_panel(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_panel(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Quadrature evaluation of E[Z^k 1{|Z| > x}] for a standard normal Z and
/// even k, independent of the closed-form moment identities.
///
/// The integral is computed in the scaled variable u = z − x,
///
/// ```text
/// E[Z^k 1{|Z|>x}] = 2·φ(x) ∫₀^∞ (x+u)^k e^{−xu−u²/2} du,
/// ```
///
/// so the exponential prefactor never underflows inside the integrand and
/// the absolute tolerance translates into a relative one.
pub fn truncated_even_moment_quadrature(k: u32, x: f64, rel_tol: f64) -> f64 {
    assert!(k % 2 == 0 && x >= 0.0);
    let g = |u: f64| {
        let mut p = 1.0;
        for _ in 0..k {
            p *= x + u;
        }
        p * exp(-x * u - 0.5 * u * u)
    };
    // e^{−xu−u²/2} < 1e−200 beyond u = 31 for every x ≥ 0; the integrand's
    // scale is at least g(0) = x^k, so 31 + a safety margin bounds the tail.
    let upper = 40.0;
    let scale = if x > 0.0 { g(0.0) } else { 1.0 };
    2.0 * normal_pdf(x) * integrate(&g, 0.0, upper, rel_tol * scale.max(1.0))
}
