//! Physical inputs, validated geometry/spectrum descriptions and the
//! dimensionless reductions every other module works in.
//!
//! Units: Boltzmann's constant is 1, so temperatures are energies.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Result, ThermoError};

/// Temperature, Planck constant and particle mass.
///
/// `h == 0` is the classical point. It is accepted here and by the
/// reductions, but the quantum sums reject it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalParams {
    pub temperature: f64,
    pub planck: f64,
    pub mass: f64,
}

impl PhysicalParams {
    pub fn new(temperature: f64, planck: f64, mass: f64) -> Result<Self> {
        let p = PhysicalParams {
            temperature,
            planck,
            mass,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(ThermoError::domain("T", "temperature must be finite and > 0"));
        }
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(ThermoError::domain("m", "mass must be finite and > 0"));
        }
        if !(self.planck.is_finite() && self.planck >= 0.0) {
            return Err(ThermoError::domain("h", "Planck constant must be finite and >= 0"));
        }
        Ok(())
    }

    /// Rejects the classical point for operations that sum a spectrum.
    pub fn require_quantum(&self) -> Result<()> {
        self.validate()?;
        if self.planck == 0.0 {
            return Err(ThermoError::domain(
                "h",
                "quantum sums need h > 0 (h = 0 is the classical limit)",
            ));
        }
        Ok(())
    }

    /// `1/T`, the Boltzmann factor exponent per unit energy.
    pub fn beta_inverse_temperature(&self) -> f64 {
        1.0 / self.temperature
    }
}

/// Rectangular box `0 <= x_k <= a_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxGeometry {
    edges: Vec<f64>,
}

impl BoxGeometry {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.is_empty() {
            return Err(ThermoError::domain("edges", "at least one edge is required"));
        }
        if let Some(bad) = edges.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(ThermoError::domain(
                "edges",
                format!("every edge must be finite and > 0, got {bad}"),
            ));
        }
        Ok(BoxGeometry { edges })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn dim(&self) -> usize {
        self.edges.len()
    }

    pub fn volume(&self) -> f64 {
        self.edges.iter().product()
    }
}

/// Separable harmonic potential `sum m w_k^2 x_k^2 / 2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillatorSpec {
    frequencies: Vec<f64>,
}

impl OscillatorSpec {
    pub fn new(frequencies: Vec<f64>) -> Result<Self> {
        if frequencies.is_empty() {
            return Err(ThermoError::domain("omega", "at least one frequency is required"));
        }
        if let Some(bad) = frequencies.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(ThermoError::domain(
                "omega",
                format!("every frequency must be finite and > 0, got {bad}"),
            ));
        }
        Ok(OscillatorSpec { frequencies })
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn dim(&self) -> usize {
        self.frequencies.len()
    }
}

/// Either of the two exactly solvable systems.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SystemSpec {
    Well(BoxGeometry),
    Oscillator(OscillatorSpec),
}

impl SystemSpec {
    pub fn dim(&self) -> usize {
        match self {
            SystemSpec::Well(g) => g.dim(),
            SystemSpec::Oscillator(s) => s.dim(),
        }
    }
}

/// Dimensionless controls. Well reductions fill `mu`, `lambda_theta`,
/// `eps`, `nu`; oscillator reductions fill `tau`, `delta`, `kappa`.
/// Aggregates of an empty sequence are reported as 0.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ReducedParams {
    pub mu: Vec<f64>,
    pub tau: Vec<f64>,
    pub rho: f64,
    /// `4 / (pi mu_k^2)`; infinite at `mu_k = 0`.
    pub lambda_theta: Vec<f64>,
    /// max mu_k
    pub eps: f64,
    /// min mu_k
    pub nu: f64,
    /// max tau_k
    pub delta: f64,
    /// min tau_k
    pub kappa: f64,
}

fn max_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(0.0)
}

fn min_of(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `mu_k = h sqrt(2 pi / (m a_k^2 T))`.
pub fn reduce_well(params: &PhysicalParams, geom: &BoxGeometry) -> Result<ReducedParams> {
    params.validate()?;
    let rho = reduce_rho(params)?;
    let scale = params.planck * (2.0 * PI / (params.mass * params.temperature)).sqrt();
    let mu: Vec<f64> = geom.edges().iter().map(|a| scale / a).collect();
    let lambda_theta = mu.iter().map(|m| 4.0 / (PI * m * m)).collect();
    Ok(ReducedParams {
        eps: max_of(&mu),
        nu: min_of(&mu),
        mu,
        lambda_theta,
        rho,
        ..Default::default()
    })
}

/// `tau_k = h w_k / (2T)`.
pub fn reduce_oscillator(params: &PhysicalParams, spec: &OscillatorSpec) -> Result<ReducedParams> {
    params.validate()?;
    let tau: Vec<f64> = spec
        .frequencies()
        .iter()
        .map(|w| params.planck * w / (2.0 * params.temperature))
        .collect();
    Ok(ReducedParams {
        delta: max_of(&tau),
        kappa: min_of(&tau),
        tau,
        rho: reduce_rho(params)?,
        ..Default::default()
    })
}

/// `rho = h sqrt(pi / (2 m T))`, so that `mu_k = 2 rho / a_k`.
pub fn reduce_rho(params: &PhysicalParams) -> Result<f64> {
    params.validate()?;
    Ok(params.planck * (PI / (2.0 * params.mass * params.temperature)).sqrt())
}

/// Flavor tag of a thermodynamic quartet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    Classical,
    Quantum,
    Regularized,
}

/// Statistical sum, free energy, mean energy and entropy.
///
/// `ln_z` is the primary value; `z` is `exp(ln_z)` and may overflow for
/// very high dimensional systems, so only `ln_z` is serialized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermoQuartet {
    #[serde(skip_serializing)]
    pub z: f64,
    pub ln_z: f64,
    pub free_energy: f64,
    pub mean_energy: f64,
    pub entropy: f64,
    pub flavor: Flavor,
}

impl ThermoQuartet {
    /// Builds a quartet from `ln Z` and `E`; `F = -T ln Z`, `S = (E - F)/T`.
    pub fn from_log_sum(ln_z: f64, mean_energy: f64, temperature: f64, flavor: Flavor) -> Self {
        let free_energy = -temperature * ln_z;
        ThermoQuartet {
            z: ln_z.exp(),
            ln_z,
            free_energy,
            mean_energy,
            entropy: (mean_energy - free_energy) / temperature,
            flavor,
        }
    }

    /// Relative residual of `F = E - T S`.
    pub fn identity_residual(&self, temperature: f64) -> f64 {
        let ts = temperature * self.entropy;
        let scale = self
            .mean_energy
            .abs()
            .max(ts.abs())
            .max(self.free_energy.abs())
            .max(f64::MIN_POSITIVE);
        (self.free_energy - (self.mean_energy - ts)).abs() / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pp(t: f64, h: f64, m: f64) -> PhysicalParams {
        PhysicalParams::new(t, h, m).unwrap()
    }

    #[test]
    fn well_reduction_examples() {
        let r = reduce_well(&pp(1.0, 1.0, 2.0 * PI), &BoxGeometry::new(vec![1.0]).unwrap()).unwrap();
        assert_relative_eq!(r.mu[0], 1.0, epsilon = 1e-15);
        assert!(r.tau.is_empty());

        let r = reduce_well(&pp(1.0, 0.0, 1.0), &BoxGeometry::new(vec![1.0, 2.0]).unwrap()).unwrap();
        assert_eq!(r.mu, vec![0.0, 0.0]);

        let r = reduce_well(&pp(2.0, 1.0, 1.0), &BoxGeometry::new(vec![1.0]).unwrap()).unwrap();
        assert_relative_eq!(r.mu[0], 1.772_453_850_905_516, epsilon = 1e-15);
        assert_relative_eq!(r.lambda_theta[0] * PI / 4.0 * r.mu[0].powi(2), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn oscillator_reduction_examples() {
        let spec = |w: Vec<f64>| OscillatorSpec::new(w).unwrap();
        assert_eq!(reduce_oscillator(&pp(1.0, 1.0, 1.0), &spec(vec![2.0])).unwrap().tau, vec![1.0]);
        assert_eq!(
            reduce_oscillator(&pp(1.0, 0.0, 1.0), &spec(vec![1.0, 5.0])).unwrap().tau,
            vec![0.0, 0.0]
        );
        let r = reduce_oscillator(&pp(0.5, 1.0, 1.0), &spec(vec![3.0])).unwrap();
        assert_eq!(r.tau, vec![3.0]);
        assert_eq!(r.delta, 3.0);
        assert_eq!(r.kappa, 3.0);
    }

    #[test]
    fn rho_examples() {
        assert_relative_eq!(reduce_rho(&pp(PI / 2.0, 1.0, 1.0)).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(reduce_rho(&pp(1.0, 0.0, 1.0)).unwrap(), 0.0);
        assert_relative_eq!(reduce_rho(&pp(1.0, 1.0, 1.0)).unwrap(), 1.253_314_137_315_500_3, epsilon = 1e-15);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        assert!(PhysicalParams::new(0.0, 1.0, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, -1.0, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, 1.0, f64::NAN).is_err());
        assert!(BoxGeometry::new(vec![]).is_err());
        assert!(BoxGeometry::new(vec![1.0, 0.0]).is_err());
        assert!(OscillatorSpec::new(vec![-2.0]).is_err());
        assert!(pp(1.0, 0.0, 1.0).require_quantum().is_err());
        match BoxGeometry::new(vec![-1.0]) {
            Err(ThermoError::Domain { field, .. }) => assert_eq!(field, "edges"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
