//! Free-energy minimization over probability distributions.
//!
//! `F(P) = sum P_n E_n + T sum P_n ln P_n` is strictly convex on the simplex
//! and its minimizer is the Gibbs distribution `P_n = e^{-E_n/T} / Z` with
//! `F_min = -T ln Z`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Result, ThermoError};
use crate::params::{PhysicalParams, SystemSpec};
use crate::quadrature::trapezoid_rule;

/// Iteration budget of [`minimize_free_energy`].
pub const MAX_ITERATIONS: usize = 100_000;

/// Spectrum truncation keeps the neglected tail below this fraction of `Z`.
pub const TAIL_REL_TOL: f64 = 1e-12;

/// A finite, ascending set of energy levels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSet {
    pub energies: Vec<f64>,
    /// Bound on `sum_{n>M} e^{-E_n/T}` for the levels left out (0 if the
    /// spectrum is genuinely finite).
    pub truncation_tail_bound: f64,
}

impl LevelSet {
    pub fn finite(mut energies: Vec<f64>) -> Result<Self> {
        if energies.len() < 2 {
            return Err(ThermoError::domain("levels", "need at least 2 energies"));
        }
        if let Some(e) = energies.iter().find(|e| !e.is_finite()) {
            return Err(ThermoError::domain("levels", format!("energies must be finite, got {e}")));
        }
        energies.sort_by(f64::total_cmp);
        Ok(LevelSet {
            energies,
            truncation_tail_bound: 0.0,
        })
    }

    /// Truncates an infinite spectrum `level(1), level(2), ...` whose level
    /// spacings never decrease. The tail then sits under a geometric series:
    /// `sum_{n>M} e^{-E_n/T} <= e^{-E_{M+1}/T} / (1 - e^{-(E_{M+2}-E_{M+1})/T})`.
    pub fn truncated(level: impl Fn(usize) -> f64, temperature: f64) -> Result<Self> {
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(ThermoError::domain("T", format!("must be finite and > 0, got {temperature}")));
        }
        let e0 = level(1);
        let mut energies = vec![e0, level(2)];
        let mut z = 1.0 + (-(energies[1] - e0) / temperature).exp();
        loop {
            let m = energies.len();
            let next = level(m + 1);
            let after = level(m + 2);
            let q = (-(after - next) / temperature).exp();
            let tail = (-(next - e0) / temperature).exp() / (1.0 - q);
            if tail < TAIL_REL_TOL * z {
                return Ok(LevelSet {
                    energies,
                    truncation_tail_bound: tail * (-e0 / temperature).exp(),
                });
            }
            if m >= MAX_ITERATIONS || !next.is_finite() {
                return Err(ThermoError::Convergence {
                    what: "spectrum truncation",
                    iterations: m,
                });
            }
            z += (-(next - e0) / temperature).exp();
            energies.push(next);
        }
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }
}

/// Probabilities on the level set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplexPoint {
    pub probabilities: Vec<f64>,
}

impl SimplexPoint {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(ThermoError::domain("probabilities", "must be finite and >= 0"));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-14 * probabilities.len().max(1) as f64 {
            return Err(ThermoError::domain("probabilities", format!("must sum to 1, got {total}")));
        }
        Ok(SimplexPoint { probabilities })
    }

    pub fn uniform(m: usize) -> Self {
        SimplexPoint {
            probabilities: vec![1.0 / m as f64; m],
        }
    }

    pub fn total_variation(&self, other: &SimplexPoint) -> f64 {
        0.5 * self
            .probabilities
            .iter()
            .zip(&other.probabilities)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

fn check_temperature(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(ThermoError::domain("T", format!("must be finite and > 0, got {t}")))
    }
}

/// `ln Z` with the largest exponent factored out.
pub fn ln_partition(levels: &LevelSet, t: f64) -> Result<f64> {
    check_temperature(t)?;
    let e0 = levels.energies.iter().copied().fold(f64::INFINITY, f64::min);
    let s: f64 = levels.energies.iter().map(|e| (-(e - e0) / t).exp()).sum();
    Ok(-e0 / t + s.ln())
}

pub fn gibbs_closed_form(levels: &LevelSet, t: f64) -> Result<SimplexPoint> {
    let ln_z = ln_partition(levels, t)?;
    Ok(SimplexPoint {
        probabilities: levels.energies.iter().map(|e| (-e / t - ln_z).exp()).collect(),
    })
}

/// `sum P E + T sum P ln P` with `0 ln 0 = 0`.
pub fn free_energy_functional(levels: &LevelSet, t: f64, point: &SimplexPoint) -> Result<f64> {
    check_temperature(t)?;
    if point.probabilities.len() != levels.len() {
        return Err(ThermoError::domain(
            "probabilities",
            format!("length {} does not match {} levels", point.probabilities.len(), levels.len()),
        ));
    }
    Ok(levels
        .energies
        .iter()
        .zip(&point.probabilities)
        .map(|(&e, &p)| if p > 0.0 { p * (e + t * p.ln()) } else { 0.0 })
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Minimization {
    pub point: SimplexPoint,
    pub f_min: f64,
    pub iterations: usize,
}

/// Exponentiated gradient from the uniform point. In log coordinates one
/// step with `eta = 1/(E_max - E_min + T)` is
/// `ln P <- (1 - eta T) ln P - eta E + const`, a contraction with factor
/// `q = (E_max - E_min)/(E_max - E_min + T)`. Stops once the sup-norm change
/// of `P` falls below `tol (1 - q)`, which keeps the distance to the fixed
/// point below `tol`.
pub fn minimize_free_energy(levels: &LevelSet, t: f64, tol: f64) -> Result<Minimization> {
    check_temperature(t)?;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(ThermoError::domain("tol", format!("must be finite and > 0, got {tol}")));
    }
    let e = &levels.energies;
    let m = e.len();
    let e_min = e.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = e.iter().copied().fold(f64::NEG_INFINITY, f64::max) - e_min;
    let eta = 1.0 / (spread + t);
    let q = spread * eta;

    let mut log_p = vec![-(m as f64).ln(); m];
    let mut p = vec![1.0 / m as f64; m];
    for it in 1..=MAX_ITERATIONS {
        for (lp, &en) in log_p.iter_mut().zip(e) {
            // gradient E + T (ln P + 1); the constant drops out on normalizing
            *lp -= eta * ((en - e_min) + t * *lp);
        }
        let top = log_p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let norm = top + log_p.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
        let mut change = 0.0f64;
        for (lp, pk) in log_p.iter_mut().zip(p.iter_mut()) {
            *lp -= norm;
            let new = lp.exp();
            change = change.max((new - *pk).abs());
            *pk = new;
        }
        if change < tol * (1.0 - q) {
            let point = SimplexPoint { probabilities: p };
            let f_min = free_energy_functional(levels, t, &point)?;
            return Ok(Minimization {
                point,
                f_min,
                iterations: it,
            });
        }
    }
    Err(ThermoError::Convergence {
        what: "exponentiated gradient",
        iterations: MAX_ITERATIONS,
    })
}

/// Uniformly distributed simplex points (normalized exponential draws).
pub fn random_simplex_points(m: usize, count: usize, seed: u64) -> Vec<SimplexPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let draws: Vec<f64> = (0..m).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
            let total: f64 = draws.iter().sum();
            SimplexPoint {
                probabilities: draws.iter().map(|d| d / total).collect(),
            }
        })
        .collect()
}

/// Smallest `F(P) - F(Gibbs)` over `count` random simplex points.
pub fn random_minimality_gap(levels: &LevelSet, t: f64, count: usize, seed: u64) -> Result<f64> {
    let f_gibbs = -t * ln_partition(levels, t)?;
    let mut gap = f64::INFINITY;
    for p in random_simplex_points(levels.len(), count, seed) {
        gap = gap.min(free_energy_functional(levels, t, &p)? - f_gibbs);
    }
    Ok(gap)
}

/// Finite-difference Hessian of `F` on the positive orthant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HessianCheck {
    /// Second differences `d^2F/dP_n^2`.
    pub diagonal: Vec<f64>,
    /// `T / P_n`.
    pub expected_diagonal: Vec<f64>,
    /// Largest `|d^2F/dP_n dP_k| / sqrt(H_nn H_kk)` over `n != k`.
    pub max_offdiagonal: f64,
    pub passed: bool,
}

const HESSIAN_REL_STEP: f64 = 1e-3;
const HESSIAN_REL_TOL: f64 = 1e-2;

/// Neumaier summation.
fn compensated_sum(xs: &[f64]) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for &x in xs {
        let t = s + x;
        c += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        s = t;
    }
    s + c
}

pub fn hessian_check(levels: &LevelSet, t: f64, point: &SimplexPoint) -> Result<HessianCheck> {
    check_temperature(t)?;
    let p = &point.probabilities;
    if p.len() != levels.len() || p.iter().any(|x| *x <= 0.0) {
        return Err(ThermoError::domain("point", "must be an interior point of matching length"));
    }
    // F off the simplex is a sum of per-level terms; sum-zero directions see
    // the same second derivatives. Each difference quotient keeps only the
    // terms of the moved levels (the rest cancel exactly) and adds them with
    // compensation, since T h^2 / P can sit far below the rounding of F when
    // some P_n is tiny.
    let term = |k: usize, x: f64| x * (levels.energies[k] + t * x.ln());
    let m = p.len();
    let h: Vec<f64> = p.iter().map(|x| HESSIAN_REL_STEP * x).collect();
    let mut diagonal = Vec::with_capacity(m);
    for i in 0..m {
        let d = compensated_sum(&[term(i, p[i] + h[i]), -2.0 * term(i, p[i]), term(i, p[i] - h[i])]);
        diagonal.push(d / (h[i] * h[i]));
    }
    let mut max_off = 0.0f64;
    for i in 0..m {
        for j in i + 1..m {
            let mut parts = Vec::with_capacity(8);
            for (si, sj, sign) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                parts.push(sign * term(i, p[i] + si * h[i]));
                parts.push(sign * term(j, p[j] + sj * h[j]));
            }
            let mixed = compensated_sum(&parts) / (4.0 * h[i] * h[j]);
            max_off = max_off.max(mixed.abs() / (diagonal[i] * diagonal[j]).abs().sqrt());
        }
    }
    let expected: Vec<f64> = p.iter().map(|x| t / x).collect();
    let diag_ok = diagonal
        .iter()
        .zip(&expected)
        .all(|(d, e)| *d > 0.0 && ((d - e) / e).abs() < HESSIAN_REL_TOL);
    Ok(HessianCheck {
        diagonal,
        expected_diagonal: expected,
        max_offdiagonal: max_off,
        passed: diag_ok && max_off < HESSIAN_REL_TOL,
    })
}

/// Diagonal second differences are positive and match `T/P_n`, mixed ones
/// vanish.
pub fn hessian_positivity_check(levels: &LevelSet, t: f64, point: &SimplexPoint) -> Result<bool> {
    Ok(hessian_check(levels, t, point)?.passed)
}

/// Momentum window half-width in units of `sqrt(m T)`.
pub const MOMENTUM_WINDOW: f64 = 12.0;

/// Relative disagreement between resolutions `n` and `n/2` that triggers
/// an error.
pub const RESOLUTION_TOL: f64 = 1e-6;

const PERTURBATIONS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSpaceCheck {
    pub z_quadrature: f64,
    pub z_closed: f64,
    pub e_quadrature: f64,
    pub e_closed: f64,
    pub z_rel_error: f64,
    pub e_rel_error: f64,
    /// `|Z_n - Z_{n/2}| / Z_n`.
    pub richardson_estimate: f64,
    /// Smallest `F(perturbed) - F(Gibbs)` over the random perturbations.
    pub min_free_energy_gain: f64,
    pub variational_ok: bool,
}

struct Direction {
    z: f64,
    e: f64,
    min_gain: f64,
}

/// One `(p, q)` plane by the trapezoid rule with `n` intervals per axis.
fn phase_plane(
    mass: f64,
    t: f64,
    q_range: (f64, f64),
    potential: &dyn Fn(f64) -> f64,
    n: usize,
    rng: Option<&mut ChaCha8Rng>,
) -> Direction {
    let pw = MOMENTUM_WINDOW * (mass * t).sqrt();
    let (ps, pws) = trapezoid_rule(-pw, pw, n);
    let (qs, qws) = trapezoid_rule(q_range.0, q_range.1, n);
    let mut h = Vec::with_capacity(ps.len() * qs.len());
    let mut w = Vec::with_capacity(h.capacity());
    for (p, wp) in ps.iter().zip(&pws) {
        for (q, wq) in qs.iter().zip(&qws) {
            h.push(p * p / (2.0 * mass) + potential(*q));
            w.push(wp * wq);
        }
    }
    let boltz: Vec<f64> = h.iter().map(|x| (-x / t).exp()).collect();
    let z: f64 = boltz.iter().zip(&w).map(|(b, w)| b * w).sum();
    let e: f64 = boltz.iter().zip(&w).zip(&h).map(|((b, w), x)| b * w * x).sum::<f64>() / z;

    let mut min_gain = f64::INFINITY;
    if let Some(rng) = rng {
        // cell probabilities P = w e^{-H/T} / Z; density entropy uses P/w
        let prob: Vec<f64> = boltz.iter().zip(&w).map(|(b, w)| b * w / z).collect();
        let free = |pr: &[f64]| -> f64 {
            pr.iter()
                .zip(&w)
                .zip(&h)
                .map(|((&p, &wk), &hk)| if p > 0.0 { p * (hk + t * (p / wk).ln()) } else { 0.0 })
                .sum()
        };
        let f0 = free(&prob);
        let live: Vec<usize> = (0..prob.len()).filter(|&k| prob[k] > 1e-6).collect();
        for _ in 0..PERTURBATIONS {
            let i = live[rng.gen_range(0..live.len())];
            let j = live[rng.gen_range(0..live.len())];
            if i == j {
                continue;
            }
            let amount = rng.gen_range(0.0..0.5) * prob[i].min(prob[j]);
            let mut moved = prob.clone();
            moved[i] += amount;
            moved[j] -= amount;
            min_gain = min_gain.min(free(&moved) - f0);
        }
    }
    Direction { z, e, min_gain }
}

/// Trapezoid quadrature of the classical phase-space integrals per
/// direction, checked against the closed forms and a half-resolution rerun,
/// plus random mass-moving perturbations of the discretized Gibbs density.
pub fn classical_phase_space_check(
    params: &PhysicalParams,
    system: &SystemSpec,
    resolution: usize,
    seed: u64,
) -> Result<PhaseSpaceCheck> {
    params.validate()?;
    if resolution < 64 {
        return Err(ThermoError::domain("resolution", format!("must be >= 64, got {resolution}")));
    }
    let t = params.temperature;
    let m = params.mass;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut directions: Vec<(f64, f64, (f64, f64), Box<dyn Fn(f64) -> f64>)> = Vec::new();
    match system {
        SystemSpec::Well(g) => {
            for &a in g.edges() {
                let z = a * (2.0 * m * t * std::f64::consts::PI).sqrt();
                directions.push((z, 0.5 * t, (0.0, a), Box::new(|_| 0.0)));
            }
        }
        SystemSpec::Oscillator(s) => {
            for &w in s.frequencies() {
                let k = m * w * w;
                let half = MOMENTUM_WINDOW * (t / k).sqrt();
                directions.push((2.0 * std::f64::consts::PI * t / w, t, (-half, half), Box::new(move |q| 0.5 * k * q * q)));
            }
        }
    }

    let (mut ln_zq, mut ln_zc, mut e_q, mut e_c) = (0.0, 0.0, 0.0, 0.0);
    let mut rich = 0.0f64;
    let mut min_gain = f64::INFINITY;
    for (zc, ec, range, v) in &directions {
        let fine = phase_plane(m, t, *range, v.as_ref(), resolution, Some(&mut rng));
        let coarse = phase_plane(m, t, *range, v.as_ref(), resolution / 2, None);
        let est = ((fine.z - coarse.z) / fine.z).abs().max(((fine.e - coarse.e) / fine.e).abs());
        if est > RESOLUTION_TOL {
            return Err(ThermoError::UnstableQuadrature(format!(
                "resolution {resolution} insufficient: half-resolution change {est:e}"
            )));
        }
        rich = rich.max(est);
        ln_zq += fine.z.ln();
        ln_zc += zc.ln();
        e_q += fine.e;
        e_c += ec;
        min_gain = min_gain.min(fine.min_gain);
    }
    let (zq, zc) = (ln_zq.exp(), ln_zc.exp());
    Ok(PhaseSpaceCheck {
        z_quadrature: zq,
        z_closed: zc,
        e_quadrature: e_q,
        e_closed: e_c,
        z_rel_error: ((zq - zc) / zc).abs(),
        e_rel_error: ((e_q - e_c) / e_c).abs(),
        richardson_estimate: rich,
        min_free_energy_gain: min_gain,
        variational_ok: min_gain >= -1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{BoxGeometry, OscillatorSpec};
    use approx::assert_relative_eq;

    fn levels(e: &[f64]) -> LevelSet {
        LevelSet::finite(e.to_vec()).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        let p = gibbs_closed_form(&levels(&[0.0, 0.0]), 1.0).unwrap();
        assert_eq!(p.probabilities, vec![0.5, 0.5]);
        let l = levels(&[0.0, 1.0, 2.0]);
        assert_relative_eq!(ln_partition(&l, 1.0).unwrap().exp(), 1.503_214_724_408_055, max_relative = 1e-15);
        let p = gibbs_closed_form(&l, 1.0).unwrap();
        let want = [0.665_240_955_774_821_9, 0.244_728_471_054_797_65, 0.090_030_573_170_380_46];
        for (a, b) in p.probabilities.iter().zip(want) {
            assert_relative_eq!(*a, b, max_relative = 1e-14);
        }
        let hot = gibbs_closed_form(&l, 1e12).unwrap();
        assert!(hot.total_variation(&SimplexPoint::uniform(3)) < 1e-11);
    }

    #[test]
    fn functional_examples() {
        let l = levels(&[0.0, 1.0, 2.0]);
        let g = gibbs_closed_form(&l, 1.0).unwrap();
        assert_relative_eq!(free_energy_functional(&l, 1.0, &g).unwrap(), -0.407_605_964_444_380_3, max_relative = 1e-14);
        let two = levels(&[0.0, 0.0]);
        assert_relative_eq!(
            free_energy_functional(&two, 2.0, &SimplexPoint::uniform(2)).unwrap(),
            -2.0 * 2f64.ln(),
            max_relative = 1e-15
        );
        let mass = SimplexPoint::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(free_energy_functional(&levels(&[0.7, 1.0, 2.0]), 1.0, &mass).unwrap(), 0.7);
    }

    #[test]
    fn minimizer_examples() {
        let l = levels(&[0.0, 1.0, 2.0]);
        let r = minimize_free_energy(&l, 1.0, 1e-10).unwrap();
        assert_relative_eq!(r.f_min, -1.503_214_724_408_055f64.ln(), epsilon = 1e-10);
        let g = gibbs_closed_form(&l, 1.0).unwrap();
        assert!(r.point.total_variation(&g) < 1e-9);

        let flat = levels(&[3.0; 6]);
        let r = minimize_free_energy(&flat, 0.5, 1e-12).unwrap();
        assert_relative_eq!(r.f_min, 3.0 - 0.5 * 6f64.ln(), epsilon = 1e-12);

        let cold = levels(&[0.0, 0.4, 1.1, 2.5, 3.0]);
        let r = minimize_free_energy(&cold, 0.3, 1e-10).unwrap();
        assert!(r.point.total_variation(&gibbs_closed_form(&cold, 0.3).unwrap()) < 1e-8);
        assert!(minimize_free_energy(&cold, 0.3, 0.0).is_err());
    }

    #[test]
    fn random_points_never_beat_gibbs() {
        let l = levels(&[0.0, 0.3, 0.9, 2.0, 4.0]);
        let gap = random_minimality_gap(&l, 0.7, 1000, 11).unwrap();
        assert!(gap >= -1e-12 && gap < 1.0);
        let pts = random_simplex_points(4, 3, 5);
        assert_eq!(pts, random_simplex_points(4, 3, 5));
        for p in pts {
            assert!((p.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn hessian_examples() {
        let l = levels(&[0.0, 1.0, 2.0]);
        let g = gibbs_closed_form(&l, 1.0).unwrap();
        assert!(hessian_positivity_check(&l, 1.0, &g).unwrap());
        assert!(hessian_positivity_check(&l, 1.0, &SimplexPoint::uniform(3)).unwrap());
        let edge = SimplexPoint::new(vec![1e-6, 0.5, 0.5 - 1e-6]).unwrap();
        let c = hessian_check(&l, 1.0, &edge).unwrap();
        assert!(c.passed, "{c:?}");
        assert!(c.diagonal[0] > 1e5);
    }

    #[test]
    fn truncated_spectrum_bounds_tail() {
        // oscillator levels (n - 1/2) at T = 1: Z = 1/(2 sinh(1/2))
        let l = LevelSet::truncated(|n| n as f64 - 0.5, 1.0).unwrap();
        let z = ln_partition(&l, 1.0).unwrap().exp();
        let exact = 0.5 / 0.5f64.sinh();
        assert!(exact - z >= 0.0 && exact - z <= l.truncation_tail_bound * (1.0 + 1e-9));
        assert!(l.truncation_tail_bound < 1e-12 * z);
    }

    #[test]
    fn phase_space_closed_forms() {
        let p = PhysicalParams::new(1.0, 0.0, 1.0).unwrap();
        let osc = SystemSpec::Oscillator(OscillatorSpec::new(vec![2.0 * std::f64::consts::PI]).unwrap());
        let c = classical_phase_space_check(&p, &osc, 64, 7).unwrap();
        assert_relative_eq!(c.z_quadrature, 1.0, max_relative = 1e-6);
        assert!(c.e_rel_error < 1e-5 && c.variational_ok);
        let well = SystemSpec::Well(BoxGeometry::new(vec![1.0]).unwrap());
        let c = classical_phase_space_check(&p, &well, 64, 7).unwrap();
        assert_relative_eq!(c.z_quadrature, (2.0 * std::f64::consts::PI).sqrt(), max_relative = 1e-6);
        assert_relative_eq!(c.e_quadrature, 0.5, max_relative = 1e-5);
        assert!(classical_phase_space_check(&p, &well, 32, 7).is_err());
    }
}
