//! Even power series of `tau/sinh(tau)` and `tau/tanh(tau)` built from
//! Bernoulli numbers.
//!
//! ```text
//! tau/sinh tau = 1 + sum_{n>=1} 2 (1 - 2^{2n-1}) B_{2n} tau^{2n} / (2n)!
//! tau/tanh tau = 1 + sum_{n>=1} 2^{2n} B_{2n} tau^{2n} / (2n)!
//! ```
//!
//! Both converge for `|tau| < pi` and alternate in sign, so the truncation
//! error after the `tau^{2K}` term is at most the first omitted term.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Result, ThermoError};

/// Largest supported order `K` (coefficients up to `tau^60`).
pub const MAX_ORDER: usize = 30;

/// Evaluation is only allowed inside this fraction of the radius `pi`.
pub const RADIUS_MARGIN: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    /// `tau / sinh(tau)`
    FSinh,
    /// `tau / tanh(tau)`
    GTanh,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BernoulliSeries {
    pub kind: SeriesKind,
    /// `coefficients[n]` multiplies `tau^{2n}`; `coefficients[0] == 1`.
    pub coefficients: Vec<f64>,
    /// First omitted coefficient, `|c_{K+1}|`; bounds the truncation error.
    pub next_coefficient: f64,
    pub radius: f64,
}

/// `B_0 ..= B_n` in exact rational arithmetic (`B_1 = -1/2`).
pub fn bernoulli_numbers(n: usize) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = Vec::with_capacity(n + 1);
    b.push(BigRational::one());
    for m in 1..=n {
        // sum_{j=0}^{m} C(m+1, j) B_j = 0
        let mut binom = BigInt::one(); // C(m+1, 0)
        let mut acc = BigRational::zero();
        for (j, bj) in b.iter().enumerate() {
            acc += BigRational::from_integer(binom.clone()) * bj;
            binom = binom * BigInt::from(m + 1 - j) / BigInt::from(j + 1);
        }
        b.push(-acc / BigRational::from_integer(BigInt::from(m + 1)));
    }
    b
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

fn coefficient(kind: SeriesKind, n: usize, b2n: &BigRational) -> BigRational {
    if n == 0 {
        return BigRational::one();
    }
    let two = BigInt::from(2);
    let pow = |e: usize| BigRational::from_integer(num_traits::pow(two.clone(), e));
    let fact = BigRational::from_integer(factorial(2 * n));
    match kind {
        SeriesKind::FSinh => {
            BigRational::from_integer(two.clone()) * (BigRational::one() - pow(2 * n - 1)) * b2n / fact
        }
        SeriesKind::GTanh => pow(2 * n) * b2n / fact,
    }
}

/// Coefficients through `tau^{2K}`.
pub fn bernoulli_series(kind: SeriesKind, order: usize) -> Result<BernoulliSeries> {
    if order == 0 || order > MAX_ORDER {
        return Err(ThermoError::domain(
            "K",
            format!("series order must be in 1..={MAX_ORDER}, got {order}"),
        ));
    }
    let b = bernoulli_numbers(2 * order + 2);
    let exact: Vec<BigRational> = (0..=order + 1).map(|n| coefficient(kind, n, &b[2 * n])).collect();
    let to_f64 = |r: &BigRational| r.to_f64().unwrap_or(f64::NAN);
    Ok(BernoulliSeries {
        kind,
        coefficients: exact[..=order].iter().map(to_f64).collect(),
        next_coefficient: to_f64(&exact[order + 1]).abs(),
        radius: PI,
    })
}

impl BernoulliSeries {
    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// Upper bound on `|closed form - truncated series|` at `tau`.
    pub fn remainder_bound(&self, tau: f64) -> f64 {
        self.next_coefficient * tau.abs().powi(2 * self.order() as i32 + 2)
    }

    pub fn closed_form(&self, tau: f64) -> f64 {
        if tau == 0.0 {
            return 1.0;
        }
        match self.kind {
            SeriesKind::FSinh => tau / tau.sinh(),
            SeriesKind::GTanh => tau / tau.tanh(),
        }
    }
}

/// Horner evaluation in `tau^2`.
pub fn series_eval(series: &BernoulliSeries, tau: f64) -> Result<f64> {
    if !tau.is_finite() || tau.abs() > RADIUS_MARGIN * series.radius {
        return Err(ThermoError::domain(
            "tau",
            format!("|tau| must be <= {RADIUS_MARGIN} pi for the series, got {tau}"),
        ));
    }
    let t2 = tau * tau;
    Ok(series.coefficients.iter().rev().fold(0.0, |acc, c| acc * t2 + c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn bernoulli_recurrence_values() {
        let b = bernoulli_numbers(12);
        assert_eq!(b[1], rat(-1, 2));
        assert_eq!(b[2], rat(1, 6));
        assert_eq!(b[3], rat(0, 1));
        assert_eq!(b[4], rat(-1, 30));
        assert_eq!(b[6], rat(1, 42));
        assert_eq!(b[12], rat(-691, 2730));
        let b60 = &bernoulli_numbers(60)[60];
        // B_60 = -1215233140483755572040304994079820246041491 / 56786730
        assert_eq!(b60.denom(), &BigInt::from(56_786_730));
        assert!(b60.numer().to_string().starts_with("-1215233140483755572040304994079820246041491"));
    }

    #[test]
    fn leading_coefficients() {
        let f = bernoulli_series(SeriesKind::FSinh, 3).unwrap();
        assert_relative_eq!(f.coefficients[1], -1.0 / 6.0, epsilon = 1e-17);
        assert_relative_eq!(f.coefficients[2], 7.0 / 360.0, epsilon = 1e-17);
        assert_relative_eq!(f.coefficients[3], -31.0 / 15120.0, epsilon = 1e-17);
        let g = bernoulli_series(SeriesKind::GTanh, 3).unwrap();
        // 2^2 B_2 / 2! = 2 B_2
        assert_relative_eq!(g.coefficients[1], 1.0 / 3.0, epsilon = 1e-17);
        assert_relative_eq!(g.coefficients[2], -1.0 / 45.0, epsilon = 1e-17);
        assert_relative_eq!(g.coefficients[3], 2.0 / 945.0, epsilon = 1e-17);
    }

    #[test]
    fn order_two_truncation_at_small_tau() {
        let f = bernoulli_series(SeriesKind::FSinh, 1).unwrap();
        let v = series_eval(&f, 0.1).unwrap();
        assert_relative_eq!(v, 1.0 - 0.01 / 6.0, epsilon = 1e-16);
        assert!((v - 0.998_335_275_729_611).abs() < 2e-6);
        assert!((f.closed_form(0.1) - v).abs() <= f.remainder_bound(0.1));
    }

    #[test]
    fn remainder_bound_holds() {
        for kind in [SeriesKind::FSinh, SeriesKind::GTanh] {
            for k in [1, 2, 5, 10] {
                let s = bernoulli_series(kind, k).unwrap();
                for tau in [0.3, 1.0, 2.0, 2.8] {
                    let err = (s.closed_form(tau) - series_eval(&s, tau).unwrap()).abs();
                    assert!(err <= s.remainder_bound(tau) * (1.0 + 1e-9) + 4e-16, "{kind:?} K={k} tau={tau}");
                }
            }
        }
    }

    #[test]
    fn domain_checks() {
        assert!(bernoulli_series(SeriesKind::FSinh, 0).is_err());
        assert!(bernoulli_series(SeriesKind::FSinh, 31).is_err());
        assert!(bernoulli_series(SeriesKind::GTanh, 30).is_ok());
        let s = bernoulli_series(SeriesKind::GTanh, 2).unwrap();
        assert!(series_eval(&s, 3.0).is_err());
        assert!(series_eval(&s, -2.8).is_ok());
    }
}
