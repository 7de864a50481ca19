//! Recovering box edges from samples of the statistical-sum ratio.
//!
//! For small `rho` the ratio is the degree-`N` polynomial
//! `prod (1 - rho/a_k)` up to terms below `e^{-pi min a^2 / rho^2}`, so its
//! real roots in `rho` are the edges.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::ln_ratio_1d;
use crate::error::{Result, ThermoError};

/// Samples must satisfy `rho <= MAX_RHO_FRACTION * min edge`.
pub const MAX_RHO_FRACTION: f64 = 0.2;

/// Relative size below which a polynomial value at a critical point is
/// treated as zero (a repeated root).
pub const MULTIPLE_ROOT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DrumRecovery {
    /// Recovered edges, ascending.
    pub edges: Vec<f64>,
    /// Fitted `c_k` in `ratio ~ sum c_k rho^k`.
    pub coefficients: Vec<f64>,
    pub residual_rms: f64,
}

/// Exact forward model: `Z_r / Z_c` of the box at each `rho`.
pub fn sample_ratios(edges: &[f64], rhos: &[f64]) -> Result<Vec<(f64, f64)>> {
    rhos.iter()
        .map(|&rho| {
            if !(rho.is_finite() && rho > 0.0) {
                return Err(ThermoError::domain("rho", format!("must be finite and > 0, got {rho}")));
            }
            let mut ln = 0.0;
            for &a in edges {
                if !(a.is_finite() && a > 0.0) {
                    return Err(ThermoError::domain("edges", format!("must be finite and > 0, got {a}")));
                }
                ln += ln_ratio_1d(2.0 * rho / a)?;
            }
            Ok((rho, ln.exp()))
        })
        .collect()
}

/// Fraction of the smallest edge covered by [`default_rhos`], kept below
/// [`MAX_RHO_FRACTION`] so that slightly low recovered edges pass the check.
pub const DEFAULT_RHO_SPAN: f64 = 0.19;

/// `rho_j = DEFAULT_RHO_SPAN min_edge j / M` for `j = 1..=M`, `M = 4N + 4`.
/// Spanning the whole admissible range matters: the edges sit far outside
/// it, and the fitted top coefficients shrink like `span^N`.
pub fn default_rhos(min_edge: f64, n: usize) -> Vec<f64> {
    let m = 4 * n + 4;
    (1..=m).map(|j| DEFAULT_RHO_SPAN * min_edge * j as f64 / m as f64).collect()
}

/// Edges recovered from `(rho, ratio)` samples, ascending.
pub fn hear_the_drum(samples: &[(f64, f64)], n: usize) -> Result<Vec<f64>> {
    Ok(hear_the_drum_detailed(samples, n)?.edges)
}

pub fn hear_the_drum_detailed(samples: &[(f64, f64)], n: usize) -> Result<DrumRecovery> {
    validate_samples(samples, n)?;
    let coefficients = fit_polynomial(samples, n)?;
    let residual_rms = (samples
        .iter()
        .map(|&(r, y)| (horner(&coefficients, r) - y).powi(2))
        .sum::<f64>()
        / samples.len() as f64)
        .sqrt();

    let roots = real_roots(&coefficients)?;
    let total: usize = roots.iter().map(|r| r.1).sum();
    if total != n {
        return Err(ThermoError::InversionFailure(format!(
            "fitted polynomial has {} real roots out of {n}; rho too large or samples too noisy",
            total
        )));
    }
    let mut edges: Vec<f64> = roots
        .iter()
        .flat_map(|&(x, m)| std::iter::repeat(x).take(m))
        .collect();
    edges.sort_by(f64::total_cmp);
    if edges[0] <= 0.0 {
        return Err(ThermoError::InversionFailure(format!(
            "non-positive root {} in fitted polynomial",
            edges[0]
        )));
    }
    let max_rho = samples.iter().map(|s| s.0).fold(0.0, f64::max);
    if max_rho > MAX_RHO_FRACTION * edges[0] {
        return Err(ThermoError::InversionFailure(format!(
            "largest sample rho = {max_rho} exceeds {MAX_RHO_FRACTION} x smallest recovered edge {}",
            edges[0]
        )));
    }
    Ok(DrumRecovery {
        edges,
        coefficients,
        residual_rms,
    })
}

fn validate_samples(samples: &[(f64, f64)], n: usize) -> Result<()> {
    if n == 0 {
        return Err(ThermoError::domain("N", "must be >= 1"));
    }
    for &(r, y) in samples {
        if !(r.is_finite() && r > 0.0) {
            return Err(ThermoError::domain("samples", format!("rho must be finite and > 0, got {r}")));
        }
        if !y.is_finite() {
            return Err(ThermoError::domain("samples", format!("ratio must be finite, got {y}")));
        }
    }
    let mut rhos: Vec<f64> = samples.iter().map(|s| s.0).collect();
    rhos.sort_by(f64::total_cmp);
    rhos.dedup();
    if rhos.len() < n + 1 {
        return Err(ThermoError::domain(
            "samples",
            format!("need at least {} distinct rho values, got {}", n + 1, rhos.len()),
        ));
    }
    Ok(())
}

/// Least squares for `c_1..c_N` with `c_0 = 1` pinned (the ratio is exactly
/// 1 at `rho = 0`), by Householder QR on the Vandermonde matrix in
/// `x = rho / max rho`. Normal equations would square its condition number.
fn fit_polynomial(samples: &[(f64, f64)], n: usize) -> Result<Vec<f64>> {
    let s = samples.iter().map(|x| x.0).fold(0.0, f64::max);
    let a = DMatrix::from_fn(samples.len(), n, |i, k| (samples[i].0 / s).powi(k as i32 + 1));
    let b = DVector::from_iterator(samples.len(), samples.iter().map(|&(_, y)| y - 1.0));
    let qr = a.qr();
    let r = qr.r();
    let rmax = r.diagonal().amax();
    if r.diagonal().iter().any(|d| !(d.abs() > f64::EPSILON * rmax)) {
        return Err(ThermoError::InversionFailure("rank-deficient sample design".into()));
    }
    let qtb = qr.q().transpose() * b;
    let scaled = r
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| ThermoError::InversionFailure("singular triangular factor".into()))?;
    Ok(std::iter::once(1.0)
        .chain(scaled.iter().enumerate().map(|(k, c)| c / s.powi(k as i32 + 1)))
        .collect())
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
}

fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(k, &ck)| k as f64 * ck).collect()
}

/// Real roots with multiplicities. Critical points (roots of the derivative,
/// found recursively) split the line into monotone pieces; each piece holds
/// at most one simple root. A critical value within tolerance of zero is a
/// repeated root unless simple roots already lie on both sides of it.
fn real_roots(c: &[f64]) -> Result<Vec<(f64, usize)>> {
    let mut c = c.to_vec();
    while c.len() > 1 && *c.last().unwrap() == 0.0 {
        c.pop();
    }
    let deg = c.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    if deg == 1 {
        return Ok(vec![(-c[0] / c[1], 1)]);
    }
    let lead = c[deg];
    let bound = 1.0 + c[..deg].iter().map(|x| (x / lead).abs()).fold(0.0, f64::max);
    let crit = real_roots(&derivative(&c))?;
    let scale = |x: f64| c.iter().rev().fold(0.0, |acc, ck| acc * x.abs() + ck.abs());

    let mut pts: Vec<(f64, f64, usize)> = vec![(-bound, horner(&c, -bound), 0)];
    for &(x, m) in &crit {
        pts.push((x, horner(&c, x), m));
    }
    pts.push((bound, horner(&c, bound), 0));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    // A small extremum that both neighbours straddle still separates two
    // close simple roots; otherwise it is a repeated root lifted off the
    // axis by noise.
    let raw: Vec<f64> = pts.iter().map(|p| p.1).collect();
    for i in 1..pts.len() - 1 {
        let (x, v, m) = pts[i];
        let straddled = m == 1 && raw[i - 1] * v < 0.0 && raw[i + 1] * v < 0.0;
        if v.abs() <= MULTIPLE_ROOT_TOL * scale(x) && !straddled {
            pts[i].1 = 0.0;
        }
    }

    let mut roots: Vec<(f64, usize)> = pts
        .iter()
        .filter(|p| p.2 > 0 && p.1 == 0.0)
        .map(|p| (p.0, p.2 + 1))
        .collect();
    for w in pts.windows(2) {
        let (a, fa, _) = w[0];
        let (b, fb, _) = w[1];
        if fa != 0.0 && fb != 0.0 && fa.signum() != fb.signum() {
            roots.push((bracketed_root(&c, a, b, fa)?, 1));
        }
    }
    roots.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(roots)
}

/// Newton steps kept inside a shrinking sign bracket, bisecting otherwise.
fn bracketed_root(c: &[f64], mut a: f64, mut b: f64, fa: f64) -> Result<f64> {
    let dc = derivative(c);
    let neg_at_a = fa < 0.0;
    let mut x = 0.5 * (a + b);
    for _ in 0..200 {
        let f = horner(c, x);
        if f == 0.0 {
            return Ok(x);
        }
        if (f < 0.0) == neg_at_a {
            a = x;
        } else {
            b = x;
        }
        let d = horner(&dc, x);
        let newton = x - f / d;
        let next = if d != 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) || b - a <= 4.0 * f64::EPSILON * a.abs().max(b.abs()) {
            return Ok(next);
        }
        x = next;
    }
    Err(ThermoError::Convergence {
        what: "polynomial root",
        iterations: 200,
    })
}
