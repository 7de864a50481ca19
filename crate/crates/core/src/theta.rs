//! Gaussian lattice sums behind the quantum potential well.
//!
//! The one-dimensional statistical sum is
//!
//! ```text
//! Z_q(mu) = sum_{n>=1} exp(-(pi/4) n^2 mu^2)
//! ```
//!
//! and Poisson summation turns it into
//!
//! ```text
//! Z_q(mu) = -1/2 + 1/mu + (2/mu) sum_{n>=1} exp(-(n pi)^2 lambda),  lambda = 4/(pi mu^2).
//! ```
//!
//! Both series decay like `exp(-pi n^2)` at `mu = 2/sqrt(pi)`, so that is where
//! the dispatcher switches from the transformed form to the direct one.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Result, ThermoError};
use crate::quadrature::adaptive_simpson;

/// Balanced-decay crossover `2/sqrt(pi)`.
pub const CROSSOVER_MU: f64 = 1.128_379_167_095_512_6;

/// Split point used by the monotonicity lemmas (`mu = 2/pi`).
pub const LEMMA_SPLIT_MU: f64 = 2.0 / PI;

/// Default relative truncation tolerance.
pub const DEFAULT_TOL: f64 = 1e-16;

/// Hard cap on the number of series terms.
pub const MAX_TERMS: usize = 1_000_000;

/// Below this the direct sum needs an impractical number of terms.
pub const DIRECT_MIN_MU: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Direct,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaValue {
    pub value: f64,
    /// `ln(value)`, accurate even when `value` underflows (direct form).
    pub ln_value: f64,
    pub representation_used: Representation,
    pub terms_used: usize,
    /// Upper bound on the discarded tail, in the units of `value`.
    pub truncation_bound: f64,
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(ThermoError::domain("mu", format!("must be finite and > 0, got {mu}")));
    }
    Ok(())
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(ThermoError::domain("tol", format!("must be finite and > 0, got {tol}")));
    }
    Ok(())
}

/// Scaled direct sums `sum_n w(n) exp(-c (n^2 - 1))` for the two weights the
/// well needs: `1` and `c n^2`. Returns `(s0, s1, terms, tail_bound_s0)`.
fn direct_scaled(c: f64, tol: f64) -> Result<(f64, f64, usize, f64)> {
    let mut s0 = 1.0;
    let mut s1 = c;
    let mut n = 1usize;
    loop {
        let next = n + 1;
        let nf = next as f64;
        let t = (-c * (nf * nf - 1.0)).exp();
        // successive ratios only shrink past `next`
        let r = (-c * (2.0 * nf + 1.0)).exp();
        let q = r * ((nf + 1.0) / nf).powi(2);
        let tail = if r < 1.0 { t / (1.0 - r) } else { f64::INFINITY };
        let tail1 = if q < 1.0 {
            c * nf * nf * t / (1.0 - q)
        } else {
            f64::INFINITY
        };
        if tail < tol * s0 && tail1 < tol * s1 {
            return Ok((s0, s1, n, tail));
        }
        s0 += t;
        s1 += c * nf * nf * t;
        n = next;
        if n >= MAX_TERMS {
            return Err(ThermoError::Convergence {
                what: "direct theta sum",
                iterations: n,
            });
        }
    }
}

/// `sum_{n>=1} exp(-(pi/4) n^2 mu^2)` summed term by term.
pub fn theta_direct(mu: f64, tol: f64) -> Result<ThetaValue> {
    check_mu(mu)?;
    check_tol(tol)?;
    if mu < DIRECT_MIN_MU {
        return Err(ThermoError::OverflowRisk { mu });
    }
    let c = 0.25 * PI * mu * mu;
    let (s0, _, terms, tail) = direct_scaled(c, tol)?;
    let lead = (-c).exp();
    Ok(ThetaValue {
        value: lead * s0,
        ln_value: -c + s0.ln(),
        representation_used: Representation::Direct,
        terms_used: terms,
        truncation_bound: lead * tail,
    })
}

/// Sums `P0 = sum exp(-(n pi)^2 lambda)` and `P1 = sum (n pi)^2 exp(-(n pi)^2 lambda)`
/// until the bounds on both remaining tails fall below the given absolute
/// tolerances. Returns `(p0, p1, terms, tail_bound_p0)`.
fn poisson_sums(lambda: f64, abs_tol0: f64, abs_tol1: f64) -> Result<(f64, f64, usize, f64)> {
    let a = PI * PI * lambda;
    let mut p0 = 0.0;
    let mut p1 = 0.0;
    let mut n = 0usize;
    loop {
        let next = n + 1;
        let nf = next as f64;
        let t = (-a * nf * nf).exp();
        let r = (-a * (2.0 * nf + 1.0)).exp();
        let q = r * ((nf + 1.0) / nf).powi(2);
        let tail0 = if r < 1.0 { t / (1.0 - r) } else { f64::INFINITY };
        let tail1 = if q < 1.0 {
            PI * PI * nf * nf * t / (1.0 - q)
        } else {
            f64::INFINITY
        };
        if tail0 <= abs_tol0 && tail1 <= abs_tol1 {
            return Ok((p0, p1, n, tail0));
        }
        p0 += t;
        p1 += PI * PI * nf * nf * t;
        n = next;
        if n >= MAX_TERMS {
            return Err(ThermoError::Convergence {
                what: "transformed theta sum",
                iterations: n,
            });
        }
    }
}

/// Poisson-transformed representation of the same sum.
pub fn theta_poisson(mu: f64, tol: f64) -> Result<ThetaValue> {
    check_mu(mu)?;
    check_tol(tol)?;
    let lambda = 4.0 / (PI * mu * mu);
    let base = -0.5 + 1.0 / mu;
    let w = 2.0 / mu;
    let (p0, _, terms, tail) =
        poisson_sums(lambda, tol * base.abs().max(f64::MIN_POSITIVE) / w, f64::INFINITY)?;
    let value = base + w * p0;
    Ok(ThetaValue {
        value,
        ln_value: value.ln(),
        representation_used: Representation::Poisson,
        terms_used: terms,
        truncation_bound: w * tail,
    })
}

/// Dispatches on [`CROSSOVER_MU`].
pub fn theta(mu: f64) -> Result<ThetaValue> {
    check_mu(mu)?;
    if mu >= CROSSOVER_MU {
        theta_direct(mu, DEFAULT_TOL)
    } else {
        theta_poisson(mu, DEFAULT_TOL)
    }
}

/// The two auxiliary sums
///
/// ```text
/// W0 = 1 - (lambda pi)^(-1/2) + 2 sum e^{-(n pi)^2 lambda}
/// W1 = 1 + 2 sum e^{-(n pi)^2 lambda} - 4 lambda sum (n pi)^2 e^{-(n pi)^2 lambda}
/// ```
///
/// with `Z_q = sqrt(lambda pi)/2 * W0` and `lambda dZ_q/dlambda = sqrt(lambda pi)/4 * W1`.
pub fn w_pair(lambda: f64) -> Result<(f64, f64)> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(ThermoError::domain("lambda", format!("must be finite and > 0, got {lambda}")));
    }
    let base = 1.0 - 1.0 / (lambda * PI).sqrt();
    let (p0, p1, _, _) = poisson_sums(lambda, 0.25 * DEFAULT_TOL, 0.25 * DEFAULT_TOL / lambda)?;
    let w0 = base + 2.0 * p0;
    let w1 = 1.0 + 2.0 * p0 - 4.0 * lambda * p1;
    Ok((w0, w1))
}

/// `E_q/T` for one well direction: the Gibbs average of `(pi/4) mu^2 n^2`.
///
/// Stays finite when the statistical sum itself underflows.
pub fn reduced_energy(mu: f64) -> Result<f64> {
    check_mu(mu)?;
    if mu >= CROSSOVER_MU {
        let c = 0.25 * PI * mu * mu;
        let (s0, s1, _, _) = direct_scaled(c, DEFAULT_TOL)?;
        Ok(s1 / s0)
    } else {
        let (w0, w1) = w_pair(4.0 / (PI * mu * mu))?;
        Ok(0.5 * w1 / w0)
    }
}

/// `sum_{n>=1} (n^2/lambda) exp(-n^2/lambda)` with `lambda = 4/(pi mu^2)`.
///
/// Equals `lambda dZ_q/dlambda`. The direct series is used above the
/// crossover; below it the transformed derivative `W1/(2 mu)`.
pub fn energy_sum(mu: f64) -> Result<f64> {
    check_mu(mu)?;
    if mu >= CROSSOVER_MU {
        let c = 0.25 * PI * mu * mu;
        let (_, s1, _, _) = direct_scaled(c, DEFAULT_TOL)?;
        Ok((-c).exp() * s1)
    } else {
        let (_, w1) = w_pair(4.0 / (PI * mu * mu))?;
        Ok(w1 / (2.0 * mu))
    }
}

/// `d/dmu [mu Z_q(mu)]`, the slope of the statistical-sum ratio.
///
/// Above [`LEMMA_SPLIT_MU`] the term-by-term derivative
/// `sum e^{-(pi/4) n^2 mu^2} (1 - (pi/2) n^2 mu)` is used; below it the
/// transformed `-1/2 + 16/(pi mu^3) sum (n pi)^2 e^{-(n pi)^2 lambda}`.
pub fn ratio_derivative(mu: f64) -> Result<f64> {
    check_mu(mu)?;
    if mu >= LEMMA_SPLIT_MU {
        let c = 0.25 * PI * mu * mu;
        let mut acc = 0.0;
        let mut n = 1usize;
        loop {
            let nf = n as f64;
            let t = (-c * nf * nf).exp();
            let term = t * (1.0 - 0.5 * PI * nf * nf * mu);
            acc += term;
            if term.abs() < 1e-18 * acc.abs().max(1e-300) || t == 0.0 {
                return Ok(acc);
            }
            n += 1;
            if n >= MAX_TERMS {
                return Err(ThermoError::Convergence {
                    what: "ratio derivative",
                    iterations: n,
                });
            }
        }
    } else {
        let lambda = 4.0 / (PI * mu * mu);
        let (_, p1, _, _) =
            poisson_sums(lambda, f64::INFINITY, DEFAULT_TOL * PI * mu.powi(3) / 32.0)?;
        Ok(-0.5 + 16.0 / (PI * mu.powi(3)) * p1)
    }
}

/// `U(x, eta) = x^2 exp(-x^2/eta)`.
pub fn lemma_u(x: f64, eta: f64) -> f64 {
    x * x * (-x * x / eta).exp()
}

/// Numbers certifying that the statistical-sum ratio keeps decreasing for
/// `mu <= 2/pi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaWitnesses {
    /// The slope bound at `mu = 2/pi`: `-1/2 + 2 pi^4 sum n^2 e^{-n^2 pi^3}`.
    pub g: f64,
    /// `int_0^1 U(x, pi^-3) dx`
    pub i01: f64,
    /// `U(1, pi^-3)`
    pub u1: f64,
    pub g_negative: bool,
}

pub fn lemma_4_10_witnesses() -> Result<LemmaWitnesses> {
    let pi3 = PI.powi(3);
    let eta = 1.0 / pi3;
    let mut sum = 0.0;
    for n in 1..=50u32 {
        let nf = n as f64;
        let t = nf * nf * (-nf * nf * pi3).exp();
        if t == 0.0 {
            break;
        }
        sum += t;
    }
    let g = -0.5 + 2.0 * PI.powi(4) * sum;
    let i01 = adaptive_simpson(|x| lemma_u(x, eta), 0.0, 1.0, 1e-12)?;
    let u1 = lemma_u(1.0, eta);
    Ok(LemmaWitnesses {
        g,
        i01,
        u1,
        g_negative: g < 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Independent brute-force oracle: plain loop, fixed term count.
    fn brute(mu: f64) -> f64 {
        (1..=2000)
            .map(|n| (-(PI / 4.0) * (n * n) as f64 * mu * mu).exp())
            .sum()
    }

    #[test]
    fn direct_examples() {
        let v = theta_direct(2.0, DEFAULT_TOL).unwrap();
        // mpmath, 50 digits
        assert_relative_eq!(v.value, 0.043_217_405_606_654_007, max_relative = 1e-15);
        assert!((v.value - (-PI).exp()).abs() < 4e-6);
        assert_eq!(v.representation_used, Representation::Direct);
        let v = theta_direct(2.0 / PI.sqrt(), DEFAULT_TOL).unwrap();
        assert_relative_eq!(v.value, 0.386_318_602_413_326_08, max_relative = 1e-15);
        let big = theta_direct(60.0, DEFAULT_TOL).unwrap();
        assert!(big.value >= 0.0 && big.value < 1e-300);
        assert_relative_eq!(big.ln_value, -(PI / 4.0) * 3600.0, max_relative = 1e-15);
    }

    #[test]
    fn direct_rejects_tiny_mu() {
        assert!(matches!(theta_direct(1e-5, DEFAULT_TOL), Err(ThermoError::OverflowRisk { .. })));
        assert!(theta_direct(0.0, DEFAULT_TOL).is_err());
        assert!(theta_direct(1.0, 0.0).is_err());
    }

    #[test]
    fn poisson_examples() {
        let v = theta_poisson(0.1, DEFAULT_TOL).unwrap();
        assert_relative_eq!(v.value, 9.5, max_relative = 1e-15);
        for mu in [2.0 / PI.sqrt(), 1.0] {
            let d = theta_direct(mu, DEFAULT_TOL).unwrap().value;
            let p = theta_poisson(mu, DEFAULT_TOL).unwrap().value;
            assert!((d - p).abs() < 1e-13, "mu={mu}: {d} vs {p}");
        }
        let v = theta_poisson(1.0, DEFAULT_TOL).unwrap();
        assert_relative_eq!(v.value, 0.500_006_974_684_712_42, max_relative = 1e-15);
    }

    #[test]
    fn dispatcher_rule() {
        assert_eq!(theta(3.0).unwrap().representation_used, Representation::Direct);
        assert_eq!(theta(0.5).unwrap().representation_used, Representation::Poisson);
        assert_eq!(theta(CROSSOVER_MU).unwrap().representation_used, Representation::Direct);
        let lo = theta_poisson(CROSSOVER_MU, DEFAULT_TOL).unwrap().value;
        let hi = theta_direct(CROSSOVER_MU, DEFAULT_TOL).unwrap().value;
        assert!((lo - hi).abs() < 1e-13);
    }

    #[test]
    fn truncation_bound_is_tight() {
        for mu in [1e-4, 1e-3, 0.05, 0.3, 1.0, 3.0, 10.0] {
            let v = theta(mu).unwrap();
            assert!(v.truncation_bound <= 1e-14 * v.value.abs().max(1.0), "{mu}: {v:?}");
        }
        let v = theta_direct(1e-3, DEFAULT_TOL).unwrap();
        assert!(v.terms_used > 1000);
    }

    #[test]
    fn matches_brute_force() {
        for mu in [0.05, 0.3, 0.9, 1.5, 4.0] {
            let b = brute(mu);
            assert_relative_eq!(theta(mu).unwrap().value, b, max_relative = 1e-13);
        }
    }

    #[test]
    fn w_pair_examples() {
        let (w0, w1) = w_pair(4.0 / PI).unwrap();
        assert_relative_eq!(w0, 0.500_006_974_684_712_42, max_relative = 1e-15);
        assert!(w1 < w0 * 4.0);
        let (w0, w1) = w_pair(PI).unwrap();
        assert!(w1 > w0);
        let (w0, w1) = w_pair(1e6).unwrap();
        assert_relative_eq!(w0, 1.0, epsilon = 1e-3);
        assert_relative_eq!(w1, 1.0, epsilon = 1e-12);
        // Z_q = sqrt(lambda pi)/2 * W0
        for mu in [0.1, 0.4, 1.0] {
            let lambda = 4.0 / (PI * mu * mu);
            let (w0, _) = w_pair(lambda).unwrap();
            assert_relative_eq!(
                (lambda * PI).sqrt() / 2.0 * w0,
                theta(mu).unwrap().value,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn energy_sum_examples() {
        let mu = 6.0;
        let c = PI / 4.0 * mu * mu;
        assert_relative_eq!(energy_sum(mu).unwrap(), c * (-c).exp(), max_relative = 1e-12);
        // mpmath: 2 es/theta at mu = 2
        assert_relative_eq!(2.0 * reduced_energy(2.0).unwrap(), 6.284_706_335_113_936_6, max_relative = 1e-14);
        assert_relative_eq!(2.0 * reduced_energy(0.2).unwrap(), 1.0 / 0.9, max_relative = 1e-14);
        for mu in [0.2, 1.0, 1.5] {
            assert_relative_eq!(
                energy_sum(mu).unwrap() / theta(mu).unwrap().value,
                reduced_energy(mu).unwrap(),
                max_relative = 1e-13
            );
        }
    }

    /// `energy_sum = lambda dZ_q/dlambda`, five-point stencil in lambda.
    #[test]
    fn energy_sum_is_log_lambda_derivative() {
        let z_of_lambda = |l: f64| theta(2.0 / (PI * l).sqrt()).unwrap().value;
        for mu in [0.3, 1.0, 2.0] {
            let lambda = 4.0 / (PI * mu * mu);
            let h = 1e-3 * lambda;
            let d = (-z_of_lambda(lambda + 2.0 * h) + 8.0 * z_of_lambda(lambda + h)
                - 8.0 * z_of_lambda(lambda - h)
                + z_of_lambda(lambda - 2.0 * h))
                / (12.0 * h);
            assert_relative_eq!(energy_sum(mu).unwrap(), lambda * d, max_relative = 1e-10);
        }
    }

    #[test]
    fn lemma_witnesses() {
        let w = lemma_4_10_witnesses().unwrap();
        assert!(w.g_negative && w.g < 0.0);
        assert!((w.i01 - 0.002_566_5).abs() / 0.002_566_5 < 0.01);
        assert!((w.u1 - 3.420e-14).abs() / 3.420e-14 < 0.01);
        // the tail past x = 1 is ~1e-14 of the whole; compare with the
        // closed form of the full-line integral, pi^-4 / 4
        assert_relative_eq!(w.i01, PI.powi(-4) / 4.0, max_relative = 1e-9);
        assert!(w.i01 > w.u1);
    }

    #[test]
    fn ratio_slope_is_negative_on_both_sides_of_split() {
        for i in 0..200 {
            let mu = 0.01 * 1.04f64.powi(i);
            let d = ratio_derivative(mu).unwrap();
            assert!(d < 0.0, "mu={mu} slope={d}");
        }
    }
}
