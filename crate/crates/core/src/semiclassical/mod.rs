//! Leading quantum correction to classical thermodynamics for a general
//! potential:
//!
//! ```text
//! Z0 = int e^{-V/T} dx
//! Z2 = (1 / (24 m T^3)) int e^{-V/T} |grad V|^2 dx
//! Z_r ~ (2 pi m T)^{N/2} (Z0 - h^2 Z2)
//! ```

pub mod expr;

use serde::Serialize;

use crate::error::{Result, ThermoError};
use crate::params::PhysicalParams;
use crate::quadrature::GaussLegendre;

pub use expr::{parse_constant, Expr};

/// Tensor grids are limited to this many dimensions.
pub const MAX_DIM: usize = 4;

/// Gauss–Legendre nodes per axis.
pub const NODES_PER_AXIS: usize = 64;

/// Automatic bounds stop where the integrand on the box surface drops
/// below this fraction of its peak.
pub const SURFACE_REL_TOL: f64 = 1e-16;

/// Largest allowed disagreement between the single-panel rule and the
/// two-panel rule with the same node count.
pub const STABILITY_TOL: f64 = 1e-9;

/// Expansion is flagged invalid when `h^2 Z2/Z0` reaches this value.
pub const VALIDITY_LIMIT: f64 = 0.1;

const MAX_RESCALES: usize = 60;
const PROBE_POINTS: usize = 9;
/// Bisection steps that shrink each automatic half-width towards the
/// smallest one passing the face test.
const REFINE_STEPS: usize = 6;

/// Where to integrate.
#[derive(Debug, Clone, PartialEq)]
pub enum IntegrationDomain {
    /// Explicit per-axis bounds (hard walls).
    Fixed(Vec<(f64, f64)>),
    /// Box around `center` whose per-axis half-widths start at `scales` and
    /// are doubled or halved until the integrand on each face is negligible.
    Automatic { center: Vec<f64>, scales: Vec<f64> },
}

pub trait PotentialField {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
    fn domain(&self) -> IntegrationDomain;
}

/// `V = sum m w_k^2 x_k^2 / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Harmonic {
    pub mass: f64,
    pub omegas: Vec<f64>,
}

impl PotentialField for Harmonic {
    fn dim(&self) -> usize {
        self.omegas.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.omegas.iter().zip(x).map(|(w, xi)| 0.5 * self.mass * w * w * xi * xi).sum()
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for ((o, w), xi) in out.iter_mut().zip(&self.omegas).zip(x) {
            *o = self.mass * w * w * xi;
        }
    }
    fn domain(&self) -> IntegrationDomain {
        IntegrationDomain::Automatic {
            center: vec![0.0; self.dim()],
            scales: self.omegas.iter().map(|w| 1.0 / (self.mass.sqrt() * w)).collect(),
        }
    }
}

/// Constant `V` inside a box with hard walls.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantBox {
    pub value: f64,
    pub edges: Vec<f64>,
}

impl PotentialField for ConstantBox {
    fn dim(&self) -> usize {
        self.edges.len()
    }
    fn value(&self, _: &[f64]) -> f64 {
        self.value
    }
    fn gradient(&self, _: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn domain(&self) -> IntegrationDomain {
        IntegrationDomain::Fixed(self.edges.iter().map(|&a| (0.0, a)).collect())
    }
}

/// Potential given as an [`Expr`], with gradients from symbolic
/// differentiation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionPotential {
    expr: Expr,
    gradient: Vec<Expr>,
    dim: usize,
    domain: IntegrationDomain,
}

impl ExpressionPotential {
    pub fn new(src: &str, dim: usize) -> Result<Self> {
        let expr = Expr::parse(src)?;
        Self::from_expr(expr, dim, None)
    }

    /// `bounds` of `None` selects automatic bounds around the origin.
    pub fn from_expr(expr: Expr, dim: usize, bounds: Option<Vec<(f64, f64)>>) -> Result<Self> {
        if expr.arity() > dim {
            return Err(ThermoError::domain(
                "potential",
                format!("expression uses x{} but dimension is {dim}", expr.arity()),
            ));
        }
        let domain = match bounds {
            Some(b) => {
                if b.len() != dim || b.iter().any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi)) {
                    return Err(ThermoError::domain("bounds", "need one finite increasing pair per axis"));
                }
                IntegrationDomain::Fixed(b)
            }
            None => IntegrationDomain::Automatic {
                center: vec![0.0; dim],
                scales: vec![1.0; dim],
            },
        };
        let gradient = (0..dim).map(|k| expr.derivative(k)).collect();
        Ok(ExpressionPotential {
            expr,
            gradient,
            dim,
            domain,
        })
    }
}

impl PotentialField for ExpressionPotential {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.expr.eval(x)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for (o, g) in out.iter_mut().zip(&self.gradient) {
            *o = g.eval(x);
        }
    }
    fn domain(&self) -> IntegrationDomain {
        self.domain.clone()
    }
}

/// The three integrals of `e^{-V/T}` weighted by `1`, `V` and `|grad V|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub z0: f64,
    /// `int V e^{-V/T}`
    pub v_weighted: f64,
    /// `int |grad V|^2 e^{-V/T}`
    pub grad_weighted: f64,
}

fn check_potential(pot: &dyn PotentialField, t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(ThermoError::domain("T", format!("must be finite and > 0, got {t}")));
    }
    let n = pot.dim();
    if n == 0 || n > MAX_DIM {
        return Err(ThermoError::domain("dimension", format!("must be in 1..={MAX_DIM}, got {n}")));
    }
    Ok(())
}

/// Values at a point: `(w, w V, w |grad V|^2)` with `w = e^{-(V - v_ref)/T}`.
fn integrands(pot: &dyn PotentialField, t: f64, v_ref: f64, x: &[f64], grad: &mut [f64]) -> [f64; 3] {
    let v = pot.value(x);
    let w = (-(v - v_ref) / t).exp();
    if w == 0.0 {
        return [0.0; 3];
    }
    pot.gradient(x, grad);
    let g2: f64 = grad.iter().map(|g| g * g).sum();
    [w, w * v, w * g2]
}

/// Tensor-product rule on the box `bounds`.
fn tensor_integrate(
    pot: &dyn PotentialField,
    t: f64,
    v_ref: f64,
    bounds: &[(f64, f64)],
    rule: &GaussLegendre,
    panels: usize,
) -> Result<[f64; 3]> {
    let n = bounds.len();
    let axes: Vec<(Vec<f64>, Vec<f64>)> = bounds.iter().map(|&(a, b)| rule.composite(a, b, panels)).collect();
    let per_axis = axes[0].0.len();
    let mut idx = vec![0usize; n];
    let mut x = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut acc = [0.0f64; 3];
    loop {
        let mut w = 1.0;
        for k in 0..n {
            x[k] = axes[k].0[idx[k]];
            w *= axes[k].1[idx[k]];
        }
        let f = integrands(pot, t, v_ref, &x, &mut grad);
        for (a, fi) in acc.iter_mut().zip(f) {
            *a += w * fi;
        }
        let mut k = 0;
        loop {
            if k == n {
                if acc.iter().any(|a| !a.is_finite()) {
                    return Err(ThermoError::NonIntegrable("integrand overflows on the domain".into()));
                }
                return Ok(acc);
            }
            idx[k] += 1;
            if idx[k] < per_axis {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Largest `w` and `w |grad V|^2` on a probe grid of the box, split into
/// the two faces normal to `axis` and everything else.
fn probe(pot: &dyn PotentialField, t: f64, v_ref: f64, center: &[f64], half: &[f64], axis: usize) -> ([f64; 2], [f64; 2]) {
    let n = center.len();
    let mut interior = [0.0f64; 2];
    let mut face = [0.0f64; 2];
    let mut idx = vec![0usize; n];
    let mut x = vec![0.0; n];
    let mut grad = vec![0.0; n];
    loop {
        for k in 0..n {
            let step = 2.0 * half[k] / (PROBE_POINTS - 1) as f64;
            x[k] = center[k] - half[k] + step * idx[k] as f64;
        }
        let on_face = idx[axis] == 0 || idx[axis] == PROBE_POINTS - 1;
        let f = integrands(pot, t, v_ref, &x, &mut grad);
        let target = if on_face { &mut face } else { &mut interior };
        for (m, v) in target.iter_mut().zip([f[0], f[2]]) {
            // NaN counts as unbounded
            *m = if v.is_nan() { f64::INFINITY } else { m.max(v) };
        }
        let mut k = 0;
        loop {
            if k == n {
                return (interior, face);
            }
            idx[k] += 1;
            if idx[k] < PROBE_POINTS {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn face_negligible(pot: &dyn PotentialField, t: f64, v_ref: f64, center: &[f64], half: &[f64], axis: usize) -> Result<bool> {
    let (interior, face) = probe(pot, t, v_ref, center, half, axis);
    // w = 1 at the center by construction of v_ref
    let peak0 = interior[0].max(face[0]).max(1.0);
    let peak2 = interior[1].max(face[1]);
    if !peak0.is_finite() || !peak2.is_finite() {
        return Err(ThermoError::NonIntegrable(format!(
            "e^(-V/T) overflows within half-width {:e} along x{}",
            half[axis],
            axis + 1
        )));
    }
    Ok(face[0] < SURFACE_REL_TOL * peak0 && face[1] <= SURFACE_REL_TOL * peak2.max(f64::MIN_POSITIVE))
}

/// Per-axis power-of-two multiples of `scales`: each half-width is the
/// smallest one whose faces are negligible, iterated over the axes until no
/// width changes.
fn automatic_bounds(pot: &dyn PotentialField, t: f64, v_ref: f64, center: &[f64], scales: &[f64]) -> Result<Vec<(f64, f64)>> {
    let n = center.len();
    let mut half = scales.to_vec();
    for _ in 0..MAX_RESCALES {
        let mut changed = false;
        for k in 0..n {
            let mut grown = 0;
            while !face_negligible(pot, t, v_ref, center, &half, k)? {
                half[k] *= 2.0;
                grown += 1;
                changed = true;
                if grown > MAX_RESCALES {
                    return Err(ThermoError::NonIntegrable(format!(
                        "e^(-V/T) does not decay within half-width {:e} along x{}",
                        half[k],
                        k + 1
                    )));
                }
            }
            for _ in 0..MAX_RESCALES {
                let keep = half[k];
                half[k] *= 0.5;
                if !face_negligible(pot, t, v_ref, center, &half, k)? {
                    half[k] = keep;
                    break;
                }
                changed = true;
            }
        }
        if !changed {
            // the face test passes at half[k] and fails at half[k]/2; narrow the gap
            for k in 0..n {
                let (mut lo, mut hi) = (0.5 * half[k], half[k]);
                for _ in 0..REFINE_STEPS {
                    let mid = 0.5 * (lo + hi);
                    half[k] = mid;
                    if face_negligible(pot, t, v_ref, center, &half, k)? {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                half[k] = hi;
            }
            return Ok(center.iter().zip(&half).map(|(c, h)| (c - h, c + h)).collect());
        }
    }
    Err(ThermoError::NonIntegrable("automatic bounds did not settle".into()))
}

/// `Z0`, `int V e^{-V/T}` and `int |grad V|^2 e^{-V/T}`, cross-checked
/// between a single 64-node panel and two 32-node panels per axis.
pub fn moments(pot: &dyn PotentialField, t: f64) -> Result<Moments> {
    check_potential(pot, t)?;
    let (bounds, center) = match pot.domain() {
        IntegrationDomain::Fixed(b) => {
            let c: Vec<f64> = b.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
            (Some(b), c)
        }
        IntegrationDomain::Automatic { center, .. } => (None, center),
    };
    let v_ref = pot.value(&center);
    let v_ref = if v_ref.is_finite() { v_ref } else { 0.0 };
    let bounds = match (bounds, pot.domain()) {
        (Some(b), _) => b,
        (None, IntegrationDomain::Automatic { center, scales }) => automatic_bounds(pot, t, v_ref, &center, &scales)?,
        _ => unreachable!(),
    };
    let fine = tensor_integrate(pot, t, v_ref, &bounds, &GaussLegendre::new(NODES_PER_AXIS), 1)?;
    let split = tensor_integrate(pot, t, v_ref, &bounds, &GaussLegendre::new(NODES_PER_AXIS / 2), 2)?;
    if !(fine[0] > 0.0) {
        return Err(ThermoError::NonIntegrable("e^(-V/T) integrates to zero".into()));
    }
    for k in [0, 2] {
        let scale = fine[k].abs().max(if k == 0 { 0.0 } else { 1e-300 });
        if (fine[k] - split[k]).abs() > STABILITY_TOL * scale {
            return Err(ThermoError::UnstableQuadrature(format!(
                "single-panel and two-panel rules disagree: {} vs {}",
                fine[k], split[k]
            )));
        }
    }
    // undo the e^{v_ref/T} factor in log space
    let shift = (-v_ref / t).exp();
    if !shift.is_finite() || shift == 0.0 {
        return Err(ThermoError::NonIntegrable(format!("reference potential {v_ref} out of range at T = {t}")));
    }
    Ok(Moments {
        z0: fine[0] * shift,
        v_weighted: fine[1] * shift,
        grad_weighted: fine[2] * shift,
    })
}

pub fn z0_integral(pot: &dyn PotentialField, t: f64) -> Result<f64> {
    Ok(moments(pot, t)?.z0)
}

pub fn z2_integral(pot: &dyn PotentialField, t: f64, mass: f64) -> Result<f64> {
    if !(mass.is_finite() && mass > 0.0) {
        return Err(ThermoError::domain("m", format!("must be finite and > 0, got {mass}")));
    }
    Ok(moments(pot, t)?.grad_weighted / (24.0 * mass * t * t * t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KwPrediction {
    pub z0: f64,
    pub z2: f64,
    pub z2_over_z0: f64,
    /// `h^2 Z2/Z0`
    pub expansion_parameter: f64,
    pub valid: bool,
    pub z_classical: f64,
    pub f_classical: f64,
    pub e_classical: f64,
    pub s_classical: f64,
    pub zr_predicted: f64,
    pub fr_predicted: f64,
    pub er_predicted: f64,
    pub sr_predicted: f64,
}

/// First-order predictions for the regularized quartet. The classical
/// energy is `N T / 2 + <V>`.
pub fn kw_expansion(pot: &dyn PotentialField, params: &PhysicalParams) -> Result<KwPrediction> {
    params.validate()?;
    let t = params.temperature;
    let m = params.mass;
    let h2 = params.planck * params.planck;
    let mo = moments(pot, t)?;
    let n = pot.dim() as f64;
    let z2 = mo.grad_weighted / (24.0 * m * t * t * t);
    let r = z2 / mo.z0;
    let ln_zc = 0.5 * n * (2.0 * std::f64::consts::PI * m * t).ln() + mo.z0.ln();
    let f_c = -t * ln_zc;
    let e_c = 0.5 * n * t + mo.v_weighted / mo.z0;
    let s_c = (e_c - f_c) / t;
    Ok(KwPrediction {
        z0: mo.z0,
        z2,
        z2_over_z0: r,
        expansion_parameter: h2 * r,
        valid: h2 * r < VALIDITY_LIMIT,
        z_classical: ln_zc.exp(),
        f_classical: f_c,
        e_classical: e_c,
        s_classical: s_c,
        zr_predicted: ln_zc.exp() * (1.0 - h2 * r),
        fr_predicted: f_c + h2 * t * r,
        er_predicted: e_c + 2.0 * h2 * t * r,
        sr_predicted: s_c + h2 * r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn harmonic_z0_and_ratio() {
        let h = Harmonic { mass: 1.0, omegas: vec![1.0] };
        assert_relative_eq!(z0_integral(&h, 1.0).unwrap(), (2.0 * PI).sqrt(), max_relative = 1e-12);
        let r = z2_integral(&h, 1.0, 1.0).unwrap() / z0_integral(&h, 1.0).unwrap();
        assert_relative_eq!(r, 1.0 / 24.0, max_relative = 1e-10);

        let h3 = Harmonic { mass: 2.0, omegas: vec![0.5, 1.0, 3.0] };
        let z = z0_integral(&h3, 1.5).unwrap();
        let want: f64 = h3.omegas.iter().map(|w| (2.0 * PI * 1.5 / (2.0 * w * w)).sqrt()).product();
        assert_relative_eq!(z, want, max_relative = 1e-12);
    }

    #[test]
    fn constant_box() {
        let b = ConstantBox { value: 0.0, edges: vec![2.5] };
        assert_relative_eq!(z0_integral(&b, 1.0).unwrap(), 2.5, max_relative = 1e-14);
        assert_eq!(z2_integral(&b, 1.0, 1.0).unwrap(), 0.0);
        let b2 = ConstantBox { value: 3.0, edges: vec![1.0, 2.0] };
        assert_relative_eq!(z0_integral(&b2, 1.5).unwrap(), 2.0 * (-2.0f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn expression_matches_builtin() {
        let e = ExpressionPotential::new("0.5*x1^2 + 2*x2^2", 2).unwrap();
        let k = kw_expansion(&e, &PhysicalParams::new(1.0, 0.0, 1.0).unwrap()).unwrap();
        // omegas 1 and 2 at m = 1
        assert_relative_eq!(k.z2_over_z0, 5.0 / 24.0, max_relative = 1e-8);
        assert_relative_eq!(k.e_classical, 2.0, max_relative = 1e-10);
        assert_eq!(k.fr_predicted, k.f_classical);
    }

    #[test]
    fn narrow_and_wide_potentials_rescale() {
        for w in [1e-3, 1e3] {
            let h = Harmonic { mass: 1.0, omegas: vec![w] };
            let e = ExpressionPotential::new(&format!("0.5*{}*x1^2", w * w), 1).unwrap();
            let want = (2.0 * PI).sqrt() / w;
            assert_relative_eq!(z0_integral(&h, 1.0).unwrap(), want, max_relative = 1e-12);
            assert_relative_eq!(z0_integral(&e, 1.0).unwrap(), want, max_relative = 1e-10);
        }
    }

    #[test]
    fn divergent_potential_is_rejected() {
        let e = ExpressionPotential::new("-x1^2", 1).unwrap();
        assert!(matches!(z0_integral(&e, 1.0), Err(ThermoError::NonIntegrable(_))));
        let flat = ExpressionPotential::new("0", 1).unwrap();
        assert!(matches!(z0_integral(&flat, 1.0), Err(ThermoError::NonIntegrable(_))));
        assert!(ExpressionPotential::new("x2", 1).is_err());
    }

    #[test]
    fn oscillator_kw_against_exact() {
        let params = PhysicalParams::new(1.0, 0.1, 1.0).unwrap();
        let h = Harmonic { mass: 1.0, omegas: vec![1.0] };
        let k = kw_expansion(&h, &params).unwrap();
        assert!(k.valid);
        let tau: f64 = 0.05;
        let f_exact = k.f_classical - (tau / tau.sinh()).ln();
        let e_exact = tau / tau.tanh();
        assert!((k.fr_predicted - f_exact).abs() < tau.powi(4));
        assert!((k.er_predicted - e_exact).abs() < tau.powi(4));
        assert!(k.fr_predicted > k.f_classical);
    }
}
