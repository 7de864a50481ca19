//! Small quadrature toolkit: Gauss–Legendre rules, adaptive Simpson and the
//! composite trapezoid rule.

use std::f64::consts::PI;

use crate::error::{Result, ThermoError};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on `P_n` from the Chebyshev-like initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    let (_, d) = legendre_with_derivative(n, x);
                    dp = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Nodes/weights mapped to `[a, b]` split into `panels` equal pieces.
    pub fn composite(&self, a: f64, b: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
        let width = (b - a) / panels as f64;
        let mut xs = Vec::with_capacity(panels * self.nodes.len());
        let mut ws = Vec::with_capacity(xs.capacity());
        for p in 0..panels {
            let lo = a + width * p as f64;
            let mid = lo + 0.5 * width;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                xs.push(mid + 0.5 * width * x);
                ws.push(0.5 * width * w);
            }
        }
        (xs, ws)
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, d)
}

const SIMPSON_MAX_DEPTH: u32 = 50;

/// Adaptive Simpson quadrature to an absolute tolerance.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut evals = 3usize;
    let v = simpson_rec(&f, a, b, fa, fm, fb, whole, abs_tol, SIMPSON_MAX_DEPTH, &mut evals)?;
    if !v.is_finite() {
        return Err(ThermoError::NonIntegrable("non-finite integrand".into()));
    }
    Ok(v)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    evals: &mut usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    *evals += 2;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if diff.abs() <= 15.0 * tol {
        return Ok(left + right + diff / 15.0);
    }
    if depth == 0 {
        return Err(ThermoError::Convergence {
            what: "adaptive Simpson",
            iterations: *evals,
        });
    }
    let l = simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, evals)?;
    let r = simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, evals)?;
    Ok(l + r)
}

/// Composite trapezoid rule with `n` intervals (`n + 1` nodes).
pub fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let interior: f64 = (1..n).map(|i| f(a + h * i as f64)).sum();
    h * (0.5 * (f(a) + f(b)) + interior)
}

/// Trapezoid nodes and weights, for tensor-product use.
pub fn trapezoid_rule(a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let h = (b - a) / n as f64;
    let xs = (0..=n).map(|i| a + h * i as f64).collect();
    let ws = (0..=n)
        .map(|i| if i == 0 || i == n { 0.5 * h } else { h })
        .collect();
    (xs, ws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(64);
        assert_relative_eq!(rule.weights.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
        // degree 126 monomial: 2/127
        let v = rule.integrate(-1.0, 1.0, |x| x.powi(126));
        assert_relative_eq!(v, 2.0 / 127.0, max_relative = 1e-12);
        let small = GaussLegendre::new(3);
        assert_relative_eq!(small.integrate(0.0, 2.0, |x| x.powi(5)), 64.0 / 6.0, epsilon = 1e-13);
    }

    #[test]
    fn gauss_legendre_gaussian() {
        let rule = GaussLegendre::new(64);
        let v = rule.integrate(-12.0, 12.0, |x| (-0.5 * x * x).exp());
        assert_relative_eq!(v, (2.0 * PI).sqrt(), max_relative = 1e-14);
        let (xs, ws) = rule.composite(-12.0, 12.0, 3);
        let c: f64 = xs.iter().zip(&ws).map(|(x, w)| w * (-0.5 * x * x).exp()).sum();
        assert_relative_eq!(c, (2.0 * PI).sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn simpson_and_trapezoid() {
        let v = adaptive_simpson(|x| x.sin(), 0.0, PI, 1e-12).unwrap();
        assert_relative_eq!(v, 2.0, epsilon = 1e-11);
        let t = trapezoid(|x| (-x * x).exp(), -10.0, 10.0, 64);
        assert_relative_eq!(t, PI.sqrt(), max_relative = 1e-14);
    }
}
