//! Harmonic oscillator in N dimensions: classical phase-space results,
//! the exact quantum spectrum sums, and their ratios
//! `f = Z_r/Z_c = prod tau_k/sinh(tau_k)` and
//! `g = E_r/E_c = mean_k tau_k/tanh(tau_k)`.

pub mod series;

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Result, ThermoError};
use crate::params::{reduce_oscillator, Flavor, OscillatorSpec, PhysicalParams, ThermoQuartet};

pub use series::{bernoulli_numbers, bernoulli_series, series_eval, BernoulliSeries, SeriesKind};

/// Below this `tau` the closed forms lose digits to cancellation and
/// Taylor polynomials are used instead.
const SMALL_TAU: f64 = 0.05;

/// `ln(tau / sinh tau)`, stable from `tau -> 0` to `tau ~ 1e300`.
pub fn ln_tau_over_sinh(tau: f64) -> f64 {
    let t = tau.abs();
    if t < SMALL_TAU {
        let t2 = t * t;
        // -t^2/6 + t^4/180 - t^6/2835 + t^8/37800 - t^10/467775
        t2 * (-1.0 / 6.0 + t2 * (1.0 / 180.0 + t2 * (-1.0 / 2835.0 + t2 * (1.0 / 37800.0 - t2 / 467_775.0))))
    } else if t > 20.0 {
        t.ln() - t + std::f64::consts::LN_2 - (-(-2.0 * t).exp()).ln_1p()
    } else {
        (t / t.sinh()).ln()
    }
}

/// `tau coth(tau) - 1`.
pub fn tau_coth_minus_one(tau: f64) -> f64 {
    let t = tau.abs();
    if t < SMALL_TAU {
        let t2 = t * t;
        // t^2/3 - t^4/45 + 2t^6/945 - t^8/4725 + 2t^10/93555
        t2 * (1.0 / 3.0 + t2 * (-1.0 / 45.0 + t2 * (2.0 / 945.0 + t2 * (-1.0 / 4725.0 + t2 * 2.0 / 93_555.0))))
    } else {
        t / t.tanh() - 1.0
    }
}

/// Energy levels `sum_k h w_k (n_k - 1/2)`, `n_k >= 1`.
#[derive(Debug, Clone)]
pub struct OscSpectrum {
    quanta: Vec<f64>,
}

impl OscSpectrum {
    pub fn new(params: &PhysicalParams, spec: &OscillatorSpec) -> Result<Self> {
        params.require_quantum()?;
        Ok(OscSpectrum {
            quanta: spec.frequencies().iter().map(|w| params.planck * w).collect(),
        })
    }

    pub fn level(&self, n: &[u64]) -> f64 {
        self.quanta
            .iter()
            .zip(n)
            .map(|(q, &k)| q * (k as f64 - 0.5))
            .sum()
    }

    pub fn ground_state(&self) -> f64 {
        0.5 * self.quanta.iter().sum::<f64>()
    }

    /// All levels `<= cutoff`, ascending, with multiplicity.
    pub fn levels_below(&self, cutoff: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut idx = vec![1u64; self.quanta.len()];
        enumerate(&self.quanta, 0, 0.0, cutoff, &mut idx, &mut |e| out.push(e));
        out.sort_by(f64::total_cmp);
        out
    }
}

fn enumerate(q: &[f64], k: usize, partial: f64, cutoff: f64, idx: &mut [u64], emit: &mut impl FnMut(f64)) {
    if k == q.len() {
        emit(partial);
        return;
    }
    // remaining directions contribute at least their zero-point energy
    let rest: f64 = q[k + 1..].iter().map(|x| 0.5 * x).sum();
    let mut n = 1u64;
    loop {
        let e = partial + q[k] * (n as f64 - 0.5);
        if e + rest > cutoff {
            break;
        }
        idx[k] = n;
        enumerate(q, k + 1, e, cutoff, idx, emit);
        n += 1;
    }
}

/// `Z_c = prod 2 pi T / w_k`, `E_c = N T`, `S_c = N + ln Z_c`.
pub fn osc_classical(params: &PhysicalParams, spec: &OscillatorSpec) -> Result<ThermoQuartet> {
    params.validate()?;
    let t = params.temperature;
    let ln_z: f64 = spec.frequencies().iter().map(|w| (2.0 * PI * t / w).ln()).sum();
    Ok(ThermoQuartet::from_log_sum(ln_z, spec.dim() as f64 * t, t, Flavor::Classical))
}

/// `Z_r = prod 2 pi T tau_k / (w_k sinh tau_k)`, `E_r = T sum tau_k coth tau_k`.
pub fn osc_regularized(params: &PhysicalParams, spec: &OscillatorSpec) -> Result<ThermoQuartet> {
    params.require_quantum()?;
    let t = params.temperature;
    let reduced = reduce_oscillator(params, spec)?;
    let ln_z: f64 = spec
        .frequencies()
        .iter()
        .zip(&reduced.tau)
        .map(|(w, &tau)| (2.0 * PI * t / w).ln() + ln_tau_over_sinh(tau))
        .sum();
    let e: f64 = t * reduced.tau.iter().map(|&tau| 1.0 + tau_coth_minus_one(tau)).sum::<f64>();
    Ok(ThermoQuartet::from_log_sum(ln_z, e, t, Flavor::Regularized))
}

/// Unscaled quantum quartet, `Z_q = prod 1/(2 sinh tau_k)`.
pub fn osc_quantum(params: &PhysicalParams, spec: &OscillatorSpec) -> Result<ThermoQuartet> {
    let r = osc_regularized(params, spec)?;
    let n = spec.dim() as f64;
    let ln_z = r.ln_z - n * (2.0 * PI * params.planck).ln();
    Ok(ThermoQuartet::from_log_sum(ln_z, r.mean_energy, params.temperature, Flavor::Quantum))
}

fn check_taus(taus: &[f64]) -> Result<()> {
    if taus.is_empty() {
        return Err(ThermoError::domain("tau", "at least one component is required"));
    }
    if taus.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(ThermoError::domain("tau", "components must be finite and >= 0"));
    }
    Ok(())
}

/// `Z_r/Z_c = prod tau_k / sinh tau_k`.
pub fn f_ratio(taus: &[f64]) -> Result<f64> {
    check_taus(taus)?;
    Ok(taus.iter().map(|&t| ln_tau_over_sinh(t)).sum::<f64>().exp())
}

/// `E_r/E_c`, the mean of `tau_k / tanh tau_k` over directions.
pub fn g_ratio(taus: &[f64]) -> Result<f64> {
    check_taus(taus)?;
    Ok(1.0 + taus.iter().map(|&t| tau_coth_minus_one(t)).sum::<f64>() / taus.len() as f64)
}

/// `S_r - S_c` for one direction: `tau coth tau - 1 + ln(tau/sinh tau)`.
pub fn entropy_excess(tau: f64) -> f64 {
    let t = tau.abs();
    if t < SMALL_TAU {
        let t2 = t * t;
        // t^2/6 - t^4/60 + t^6/567 - t^8/5400 + t^10/51975
        t2 * (1.0 / 6.0 + t2 * (-1.0 / 60.0 + t2 * (1.0 / 567.0 + t2 * (-1.0 / 5400.0 + t2 / 51_975.0))))
    } else {
        tau_coth_minus_one(t) + ln_tau_over_sinh(t)
    }
}

/// Closed-form `tau`-derivatives of `f`, `g` and the regularized entropy,
/// with their signs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityCertificates {
    pub tau: f64,
    /// `(sinh tau - tau cosh tau) / sinh^2 tau`
    pub df: f64,
    /// `(sinh 2tau - 2tau) / (2 sinh^2 tau)`
    pub dg: f64,
    /// `1/tau - tau / sinh^2 tau`
    pub ds: f64,
    pub sign_df: i8,
    pub sign_dg: i8,
    pub sign_ds: i8,
}

impl MonotonicityCertificates {
    /// f decreasing, g and the entropy increasing.
    pub fn holds(&self) -> bool {
        self.sign_df == -1 && self.sign_dg == 1 && self.sign_ds == 1
    }
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

pub fn monotonicity_certificates(tau: f64) -> Result<MonotonicityCertificates> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(ThermoError::domain("tau", format!("must be finite and > 0, got {tau}")));
    }
    let (df, dg, ds, sf, sg, ss);
    if tau < SMALL_TAU {
        let t2 = tau * tau;
        df = tau * (-1.0 / 3.0 + t2 * (7.0 / 90.0 + t2 * (-31.0 / 2520.0 + t2 * (127.0 / 75600.0 - t2 * 73.0 / 342_144.0))));
        dg = tau * (2.0 / 3.0 + t2 * (-4.0 / 45.0 + t2 * (4.0 / 315.0 + t2 * (-8.0 / 4725.0 + t2 * 4.0 / 18_711.0))));
        ds = tau * (1.0 / 3.0 + t2 * (-1.0 / 15.0 + t2 * (2.0 / 189.0 + t2 * (-1.0 / 675.0 + t2 * 2.0 / 10_395.0))));
        sf = sign(df);
        sg = sign(dg);
        ss = sign(ds);
    } else {
        // factor out 1/sinh so the signs survive underflow at large tau
        let inv_sinh = if tau > 700.0 { 0.0 } else { 1.0 / tau.sinh() };
        let coth = 1.0 / tau.tanh();
        let f_factor = 1.0 - tau * coth;
        df = inv_sinh * f_factor;
        let g_factor = coth - tau * inv_sinh * inv_sinh;
        dg = g_factor;
        ds = 1.0 / tau - tau * inv_sinh * inv_sinh;
        sf = sign(f_factor);
        sg = sign(g_factor);
        ss = sign(ds);
    }
    Ok(MonotonicityCertificates {
        tau,
        df,
        dg,
        ds,
        sign_df: sf,
        sign_dg: sg,
        sign_ds: ss,
    })
}
