//! Face measures of a box and the finite geometric expansion of the
//! statistical-sum ratio in powers of `rho`.

use serde::Serialize;

use crate::error::{Result, ThermoError};
use crate::params::BoxGeometry;

/// `U_k`: elementary symmetric sums of the edges. `V_k = 2^{N-k} U_k` is the
/// total `k`-dimensional measure of the box faces (`V_0` counts vertices).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometricCoefficients {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl GeometricCoefficients {
    pub fn dim(&self) -> usize {
        self.u.len() - 1
    }
}

/// Elementary symmetric sums of `xs`, `e_0 = 1`.
pub(crate) fn elementary_symmetric(xs: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; xs.len() + 1];
    e[0] = 1.0;
    for (i, &x) in xs.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            e[k] += x * e[k - 1];
        }
    }
    e
}

pub fn geometric_coefficients(geom: &BoxGeometry) -> GeometricCoefficients {
    let u = elementary_symmetric(geom.edges());
    let n = geom.dim();
    let v = u
        .iter()
        .enumerate()
        .map(|(k, uk)| uk * 2f64.powi((n - k) as i32))
        .collect();
    GeometricCoefficients { u, v }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Compensated Horner: returns `(value, correction)` with the polynomial
/// `sum c_k x^k` equal to `value + correction` up to `O(u^2 cond)`.
fn horner_compensated(coeffs: &[f64], x: f64) -> (f64, f64) {
    let mut s = *coeffs.last().unwrap_or(&0.0);
    let mut c = 0.0;
    for &a in coeffs.iter().rev().skip(1) {
        let (p, pe) = two_prod(s, x);
        let (t, se) = two_sum(p, a);
        s = t;
        c = c * x + (pe + se);
    }
    (s, c)
}

/// `V_N^{-1} sum_k (-1)^k rho^k V_{N-k} / 2^k`, which equals `prod (1 - rho/a_k)`.
pub fn kac_expansion_ratio(geom: &BoxGeometry, rho: f64) -> Result<f64> {
    if !(rho.is_finite() && rho >= 0.0) {
        return Err(ThermoError::domain("rho", format!("must be finite and >= 0, got {rho}")));
    }
    let g = geometric_coefficients(geom);
    let n = g.dim();
    // V_{N-k} / 2^k = 2^k U_{N-k} / 2^k
    let coeffs: Vec<f64> = (0..=n)
        .map(|k| if k % 2 == 0 { g.u[n - k] } else { -g.u[n - k] })
        .collect();
    let (s, c) = horner_compensated(&coeffs, rho);
    let un = g.u[n];
    let q = s / un;
    // one Newton correction of the quotient against the double-double numerator
    let (p, pe) = two_prod(q, un);
    Ok(q + (((s - p) - pe) + c) / un)
}

/// Leading-order mean-energy ratio `1 + rho V_{N-1} / (2 N V_N)`.
///
/// Uses `V_{N-1} / V_N = 2 U_{N-1} / U_N = 2 sum 1/a_k`; the sums themselves
/// overflow for a few hundred edges.
pub fn kac_mean_energy_ratio(geom: &BoxGeometry, rho: f64) -> Result<f64> {
    if !(rho.is_finite() && rho >= 0.0) {
        return Err(ThermoError::domain("rho", format!("must be finite and >= 0, got {rho}")));
    }
    let inv_sum: f64 = geom.edges().iter().map(|a| 1.0 / a).sum();
    Ok(1.0 + rho * inv_sum / geom.dim() as f64)
}
