//! The asymptotic identifiability boundary `δ*(ε)` for the semi-random
//! model, plus the finite-N kinematic classification that underlies it.
//!
//! `μ*(ε)` is the unique positive root of
//!
//! ```text
//! h(μ) = (1-ε)(μ(1-Φ(μ)) - φ(μ)) + εμ
//! ```
//!
//! and `δ*(ε) = 1 - (1-ε)Φ(μ*)`. `h` is strictly increasing on `(0, ∞)`
//! with `h'(μ) = (1-ε)(1-Φ(μ)) + ε`, and `h(0) = -(1-ε)φ(0) < 0`.
//!
//! The normal tail is evaluated as `erfc(x/√2)/2` (musl-derived `libm`
//! implementation, sub-ulp accuracy), which keeps `1 - Φ(μ)` accurate when
//! `μ*` is large, i.e. for small `ε`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// `ε` closer than this to 0 or 1 is refused rather than extrapolated.
pub const EPS_GUARD: f64 = 1e-12;
pub const DEFAULT_ROOT_TOL: f64 = 1e-12;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn std_normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Upper tail `1 - Φ(x)` without cancellation.
pub fn std_normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps >= EPS_GUARD && eps <= 1.0 - EPS_GUARD) {
        return Err(invalid(format!(
            "epsilon = {eps} outside [{EPS_GUARD:e}, 1 - {EPS_GUARD:e}]"
        )));
    }
    Ok(())
}

/// Left side of the fixed-point equation for `μ*`.
pub fn boundary_residual(mu: f64, eps: f64) -> f64 {
    (1.0 - eps) * (mu * std_normal_sf(mu) - std_normal_pdf(mu)) + eps * mu
}

fn boundary_slope(mu: f64, eps: f64) -> f64 {
    (1.0 - eps) * std_normal_sf(mu) + eps
}

/// `[lo, hi]` with `h(lo) < 0 <= h(hi)`.
fn bracket(eps: f64) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = (1e-8, 10.0);
    while boundary_residual(lo, eps) >= 0.0 {
        lo *= 0.1;
        if lo < 1e-300 {
            return Err(Error::NumericalFailure(format!("no lower bracket for epsilon = {eps}")));
        }
    }
    while boundary_residual(hi, eps) < 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::NumericalFailure(format!("no upper bracket for epsilon = {eps}")));
        }
    }
    Ok((lo, hi))
}

/// `μ*(ε)` by bisection.
pub fn mu_star(eps: f64, tol: f64) -> Result<f64> {
    check_eps(eps)?;
    let (mut lo, mut hi) = bracket(eps)?;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if boundary_residual(mid, eps) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (rl, rh) = (boundary_residual(lo, eps), boundary_residual(hi, eps));
    let mu = if rl.abs() <= rh.abs() { lo } else { hi };
    let res = boundary_residual(mu, eps);
    if res.abs() > tol {
        return Err(Error::NumericalFailure(format!(
            "bisection residual {res:e} exceeds {tol:e} at epsilon = {eps}"
        )));
    }
    Ok(mu)
}

/// `μ*(ε)` by Newton's method, falling back to bisection whenever a step
/// leaves the current sign bracket.
pub fn mu_star_newton(eps: f64, tol: f64) -> Result<f64> {
    check_eps(eps)?;
    let (mut lo, mut hi) = bracket(eps)?;
    let mut mu = 0.5 * (lo + hi);
    for _ in 0..500 {
        let h = boundary_residual(mu, eps);
        if h < 0.0 {
            lo = mu;
        } else {
            hi = mu;
        }
        let mut next = mu - h / boundary_slope(mu, eps);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - mu).abs() <= 4.0 * f64::EPSILON * mu {
            mu = next;
            break;
        }
        mu = next;
    }
    let res = boundary_residual(mu, eps);
    if res.abs() > tol {
        return Err(Error::NumericalFailure(format!(
            "Newton residual {res:e} exceeds {tol:e} at epsilon = {eps}"
        )));
    }
    Ok(mu)
}

/// `δ*` from a known `μ*`, written as `ε + (1-ε)(1-Φ(μ*))` to avoid
/// cancellation.
pub fn delta_from_mu(mu: f64, eps: f64) -> f64 {
    eps + (1.0 - eps) * std_normal_sf(mu)
}

pub fn delta_star(eps: f64) -> Result<f64> {
    Ok(delta_from_mu(mu_star(eps, DEFAULT_ROOT_TOL)?, eps))
}

/// Sparse-limit approximation `2ε ln(1/ε)`.
pub fn delta_star_asymptote(eps: f64) -> f64 {
    2.0 * eps * (1.0 / eps).ln()
}

/// The `ε` at which `δ*(ε) = alpha`, by bisection on the increasing map.
pub fn epsilon_star(alpha: f64) -> Result<f64> {
    let (mut lo, mut hi) = (EPS_GUARD, 1.0 - EPS_GUARD);
    if !(alpha > delta_star(lo)? && alpha < delta_star(hi)?) {
        return Err(invalid(format!("alpha = {alpha} outside the range of delta_star")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if delta_star(mid)? < alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct BoundaryPoint {
    pub epsilon: f64,
    pub mu_star: f64,
    pub delta_star: f64,
    pub residual: f64,
}

pub fn boundary_point(eps: f64) -> Result<BoundaryPoint> {
    let mu = mu_star(eps, DEFAULT_ROOT_TOL)?;
    Ok(BoundaryPoint {
        epsilon: eps,
        mu_star: mu,
        delta_star: delta_from_mu(mu, eps),
        residual: boundary_residual(mu, eps),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoryCurve {
    pub eps_min: f64,
    pub eps_max: f64,
    pub steps: usize,
    pub root_tol: f64,
    pub points: Vec<BoundaryPoint>,
}

/// Evaluates the boundary on `steps` evenly spaced `ε` values in
/// `[eps_min, eps_max]`.
pub fn theory_curve(eps_min: f64, eps_max: f64, steps: usize) -> Result<TheoryCurve> {
    check_eps(eps_min)?;
    check_eps(eps_max)?;
    if steps == 0 || (steps > 1 && eps_min >= eps_max) || (steps == 1 && eps_min != eps_max) {
        return Err(invalid(format!(
            "bad epsilon grid: [{eps_min}, {eps_max}] with {steps} steps"
        )));
    }
    let points = (0..steps)
        .map(|i| {
            let eps = if steps == 1 {
                eps_min
            } else {
                eps_min + (eps_max - eps_min) * i as f64 / (steps - 1) as f64
            };
            boundary_point(eps)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TheoryCurve {
        eps_min,
        eps_max,
        steps,
        root_tol: DEFAULT_ROOT_TOL,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntersectionClass {
    TrivialIntersectionWhp,
    NontrivialIntersectionWhp,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TroppClassification {
    pub verdict: IntersectionClass,
    pub xi: f64,
}

/// Classifies a randomly rotated pair of cones with statistical dimensions
/// `delta_d` and `delta_k` in `R^n` at failure probability `eta`.
pub fn tropp_classification(n: usize, delta_d: f64, delta_k: f64, eta: f64) -> Result<TroppClassification> {
    if n == 0 {
        return Err(invalid("N must be positive"));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(invalid(format!("eta = {eta} outside (0, 1)")));
    }
    let nf = n as f64;
    for d in [delta_d, delta_k] {
        if !(0.0..=nf).contains(&d) {
            return Err(invalid(format!("statistical dimension {d} outside [0, {n}]")));
        }
    }
    let xi = (8.0 * (4.0 / eta).ln()).sqrt();
    let ratio = (delta_d + delta_k) / nf;
    let band = xi / nf.sqrt();
    let verdict = if ratio <= 1.0 - band {
        IntersectionClass::TrivialIntersectionWhp
    } else if ratio >= 1.0 + band {
        IntersectionClass::NontrivialIntersectionWhp
    } else {
        IntersectionClass::Indeterminate
    };
    Ok(TroppClassification { verdict, xi })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson integral of the density over [0, x].
    fn simpson_cdf(x: f64) -> f64 {
        let n = 20_000;
        let h = x / n as f64;
        let mut s = std_normal_pdf(0.0) + std_normal_pdf(x);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * std_normal_pdf(i as f64 * h);
        }
        0.5 + s * h / 3.0
    }

    /// Plain Newton from a fixed start, no bracketing.
    fn newton_oracle(eps: f64) -> f64 {
        let mut mu = 1.0;
        for _ in 0..100 {
            let q = 0.5 * libm::erfc(mu / std::f64::consts::SQRT_2);
            let phi = (-0.5 * mu * mu).exp() / (2.0 * std::f64::consts::PI).sqrt();
            let h = (1.0 - eps) * (mu * q - phi) + eps * mu;
            mu -= h / ((1.0 - eps) * q + eps);
        }
        mu
    }

    #[test]
    fn normal_reference_values() {
        assert_eq!(std_normal_pdf(0.0), 0.398_942_280_401_432_7);
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert!((simpson_cdf(1.959963985) - 0.975).abs() < 1e-9);
        assert!((std_normal_cdf(1.959963985) - simpson_cdf(1.959963985)).abs() < 1e-12);
        assert!((std_normal_cdf(-1.3) + std_normal_cdf(1.3) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mu_star_reference_values() {
        let m5 = mu_star(0.5, 1e-12).unwrap();
        let m1 = mu_star(0.1, 1e-12).unwrap();
        assert!((m5 - newton_oracle(0.5)).abs() < 1e-12);
        assert!((m1 - newton_oracle(0.1)).abs() < 1e-12);
        assert!((m5 - 0.2760).abs() < 1e-3, "{m5}");
        assert!((m1 - 0.901).abs() < 1e-3, "{m1}");
        assert!(mu_star(0.1, 1e-12).unwrap() > m5 && m5 > mu_star(0.9, 1e-12).unwrap());
    }

    #[test]
    fn delta_star_reference_values() {
        assert!((delta_star(0.5).unwrap() - 0.6957).abs() < 1e-3);
        assert!((delta_star(0.1).unwrap() - 0.2654).abs() < 1e-3);
        assert!(delta_star(1.0 - 1e-6).unwrap() > 0.999);
    }

    #[test]
    fn solvers_agree() {
        for i in 1..100 {
            let eps = i as f64 / 100.0;
            let a = mu_star(eps, 1e-12).unwrap();
            let b = mu_star_newton(eps, 1e-12).unwrap();
            assert!((a - b).abs() <= 1e-10, "eps {eps}: {a} vs {b}");
        }
    }

    #[test]
    fn extreme_epsilon_is_refused() {
        assert!(mu_star(0.0, 1e-12).is_err());
        assert!(mu_star(1.0, 1e-12).is_err());
        assert!(mu_star(1e-13, 1e-12).is_err());
        assert!(mu_star(f64::NAN, 1e-12).is_err());
        assert!(mu_star(1e-12, 1e-12).is_ok());
        assert!(mu_star(1.0 - 1e-12, 1e-12).is_ok());
    }

    #[test]
    fn asymptote_closed_form() {
        let e = (-1.0f64).exp();
        assert!((delta_star_asymptote(e) - 0.735_758_882_3).abs() < 1e-10);
    }

    #[test]
    fn epsilon_star_inverts_delta_star() {
        for alpha in [0.3, 0.5, 0.7] {
            let e = epsilon_star(alpha).unwrap();
            assert!((delta_star(e).unwrap() - alpha).abs() < 1e-10);
        }
        assert!(epsilon_star(1.5).is_err());
    }

    #[test]
    fn curve_is_monotone() {
        let c = theory_curve(0.01, 0.99, 99).unwrap();
        assert_eq!(c.points.len(), 99);
        for w in c.points.windows(2) {
            assert!(w[1].epsilon > w[0].epsilon);
            assert!(w[1].mu_star < w[0].mu_star);
            assert!(w[1].delta_star > w[0].delta_star);
        }
        assert!(theory_curve(0.5, 0.2, 4).is_err());
        assert!(theory_curve(0.1, 0.2, 0).is_err());
    }

    #[test]
    fn tropp_cases() {
        let t = tropp_classification(100, 40.0, 60.0, 0.3).unwrap();
        assert_eq!(t.verdict, IntersectionClass::Indeterminate);
        let t = tropp_classification(10, 4.0, 6.0, 0.5).unwrap();
        assert_eq!(t.verdict, IntersectionClass::Indeterminate);
        let x = tropp_classification(1, 0.5, 0.5, 0.04).unwrap().xi;
        assert!((x - (8.0 * 100f64.ln()).sqrt()).abs() < 1e-15);
        assert!((x - 6.069_708).abs() < 1e-4);
        let big = tropp_classification(1_000_000, 450_000.0, 450_000.0, 0.04).unwrap();
        assert_eq!(big.verdict, IntersectionClass::TrivialIntersectionWhp);
        let over = tropp_classification(1_000_000, 600_000.0, 500_000.0, 0.04).unwrap();
        assert_eq!(over.verdict, IntersectionClass::NontrivialIntersectionWhp);
        assert!(tropp_classification(10, 1.0, 1.0, 1.0).is_err());
        assert!(tropp_classification(10, 11.0, 1.0, 0.5).is_err());
    }
}
