//! Particle in an N-dimensional rectangular box with hard walls.
//!
//! Every direction contributes a factor `Z_q(mu_k)` (see [`crate::theta`]),
//! so ratios to the classical values depend only on the reduced parameters
//! `mu_k = 2 rho / a_k`.

pub mod drum;
pub mod geometry;

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Result, ThermoError};
use crate::params::{reduce_well, BoxGeometry, Flavor, PhysicalParams, ThermoQuartet};
use crate::theta::{self, CROSSOVER_MU};

pub use drum::{default_rhos, hear_the_drum, hear_the_drum_detailed, sample_ratios, DrumRecovery};
pub use geometry::{geometric_coefficients, kac_expansion_ratio, kac_mean_energy_ratio, GeometricCoefficients};

/// Validity limit on `eps = max mu_k` for the small-`mu` asymptotics.
pub const ASYMPTOTIC_EPS_MAX: f64 = 0.3;

/// Energy levels `h^2 pi^2 / (2m) sum n_k^2 / a_k^2`.
#[derive(Debug, Clone)]
pub struct WellSpectrum {
    unit: Vec<f64>,
}

impl WellSpectrum {
    pub fn new(params: &PhysicalParams, geom: &BoxGeometry) -> Result<Self> {
        params.require_quantum()?;
        let c = params.planck * params.planck * PI * PI / (2.0 * params.mass);
        Ok(WellSpectrum {
            unit: geom.edges().iter().map(|a| c / (a * a)).collect(),
        })
    }

    pub fn level(&self, n: &[u64]) -> f64 {
        self.unit.iter().zip(n).map(|(u, &k)| u * (k * k) as f64).sum()
    }

    /// All levels `<= cutoff`, ascending, with multiplicity.
    pub fn levels_below(&self, cutoff: f64) -> Vec<f64> {
        let mut out = Vec::new();
        self.walk(0, 0.0, cutoff, &mut out);
        out.sort_by(f64::total_cmp);
        out
    }

    fn walk(&self, k: usize, partial: f64, cutoff: f64, out: &mut Vec<f64>) {
        if k == self.unit.len() {
            out.push(partial);
            return;
        }
        let rest: f64 = self.unit[k + 1..].iter().sum();
        let mut n = 1u64;
        loop {
            let e = partial + self.unit[k] * (n * n) as f64;
            if e + rest > cutoff {
                break;
            }
            self.walk(k + 1, e, cutoff, out);
            n += 1;
        }
    }
}

/// `Z_c = (2 m T pi)^{N/2} prod a_k`, `E_c = N T / 2`. Accepts `h = 0`.
pub fn well_classical(params: &PhysicalParams, geom: &BoxGeometry) -> Result<ThermoQuartet> {
    params.validate()?;
    let t = params.temperature;
    let thermal = (2.0 * params.mass * t * PI).sqrt();
    let ln_z: f64 = geom.edges().iter().map(|a| (a * thermal).ln()).sum();
    let n = geom.dim() as f64;
    Ok(ThermoQuartet::from_log_sum(ln_z, 0.5 * n * t, t, Flavor::Classical))
}

/// `Z_r = (2 pi h)^N prod Z_q(mu_k)`, `E_r = T sum <E>/T per direction`.
pub fn well_regularized(params: &PhysicalParams, geom: &BoxGeometry) -> Result<ThermoQuartet> {
    params.require_quantum()?;
    let t = params.temperature;
    let reduced = reduce_well(params, geom)?;
    let mut ln_z = geom.dim() as f64 * (2.0 * PI * params.planck).ln();
    let mut e = 0.0;
    for &mu in &reduced.mu {
        ln_z += theta::theta(mu)?.ln_value;
        e += t * theta::reduced_energy(mu)?;
    }
    Ok(ThermoQuartet::from_log_sum(ln_z, e, t, Flavor::Regularized))
}

/// Unscaled quantum quartet built from `Z_q = prod Z_q(mu_k)`.
pub fn well_quantum(params: &PhysicalParams, geom: &BoxGeometry) -> Result<ThermoQuartet> {
    let r = well_regularized(params, geom)?;
    let ln_z = r.ln_z - geom.dim() as f64 * (2.0 * PI * params.planck).ln();
    Ok(ThermoQuartet::from_log_sum(ln_z, r.mean_energy, params.temperature, Flavor::Quantum))
}

/// `ln(Z_r/Z_c)` for one direction, i.e. `ln(mu Z_q(mu))`.
pub fn ln_ratio_1d(mu: f64) -> Result<f64> {
    if mu < CROSSOVER_MU {
        // mu Z_q = W0, computed without forming 1/mu
        let (w0, _) = theta::w_pair(4.0 / (PI * mu * mu))?;
        Ok(w0.ln())
    } else {
        Ok(mu.ln() + theta::theta(mu)?.ln_value)
    }
}

/// `(E_r - E_c) / T` for one direction, without cancellation at small `mu`.
pub fn energy_excess_1d(mu: f64) -> Result<f64> {
    if mu < CROSSOVER_MU {
        // W1 - W0 = (lambda pi)^{-1/2} - 4 lambda P1
        let (w0, w1) = theta::w_pair(4.0 / (PI * mu * mu))?;
        Ok(0.5 * (w1 - w0) / w0)
    } else {
        Ok(theta::reduced_energy(mu)? - 0.5)
    }
}

/// `E_r / E_c` in one dimension as a function of `mu`. Always above 1.
pub fn well_energy_ratio(mu: f64) -> Result<f64> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(ThermoError::domain("mu", format!("must be finite and > 0, got {mu}")));
    }
    Ok(1.0 + 2.0 * energy_excess_1d(mu)?)
}

/// Small-`mu` prediction `S_c - sum mu_k / 4` for the regularized entropy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyPrediction {
    pub predicted: f64,
    pub classical: f64,
    pub eps: f64,
    /// `eps` is beyond [`ASYMPTOTIC_EPS_MAX`]; the prediction is unreliable.
    pub outside_validity: bool,
}

pub fn well_entropy_asymptotic(params: &PhysicalParams, geom: &BoxGeometry) -> Result<EntropyPrediction> {
    let reduced = reduce_well(params, geom)?;
    let classical = well_classical(params, geom)?.entropy;
    let shift: f64 = reduced.mu.iter().map(|m| 0.25 * m).sum();
    Ok(EntropyPrediction {
        predicted: classical - shift,
        classical,
        eps: reduced.eps,
        outside_validity: reduced.eps > ASYMPTOTIC_EPS_MAX,
    })
}
