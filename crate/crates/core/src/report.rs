//! Side-by-side comparison of regularized and classical quantities at one
//! parameter point.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::Result;
use crate::oscillator::{self, ln_tau_over_sinh, tau_coth_minus_one};
use crate::params::{
    reduce_oscillator, reduce_well, BoxGeometry, OscillatorSpec, PhysicalParams, ReducedParams, ThermoQuartet,
};
use crate::well::{self, energy_excess_1d, kac_mean_energy_ratio, ln_ratio_1d};

/// Relative width of the band in which a difference counts as zero.
pub const SIGN_ZERO_BAND: f64 = 1e-10;

/// `-1`, `0` or `+1`; zero when `|d| <= SIGN_ZERO_BAND (1 + |reference|)`.
pub fn banded_sign(d: f64, reference: f64) -> i8 {
    if d.abs() <= SIGN_ZERO_BAND * (1.0 + reference.abs()) {
        0
    } else if d > 0.0 {
        1
    } else {
        -1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ratios {
    pub z_ratio: f64,
    pub e_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diffs {
    pub d_f: f64,
    pub d_e: f64,
    pub d_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Signs {
    pub d_f: i8,
    pub d_e: i8,
    pub d_s: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub point: ReducedParams,
    pub classical: ThermoQuartet,
    pub regularized: ThermoQuartet,
    pub ratios: Ratios,
    pub diffs: Diffs,
    pub signs: Signs,
    /// `|computed - predicted|` per named small-parameter expansion.
    pub asymptotic_residuals: BTreeMap<String, f64>,
}

/// Names of the residual columns emitted for wells, in output order.
pub const WELL_RESIDUALS: [&str; 4] = ["e_ratio_small_mu", "entropy_small_mu", "kac_mean_energy", "z_ratio_small_mu"];

/// Names of the residual columns emitted for oscillators, in output order.
pub const OSC_RESIDUALS: [&str; 3] = ["e_ratio_tau2", "kw_free_energy", "z_ratio_tau2"];

fn assemble(
    point: ReducedParams,
    classical: ThermoQuartet,
    regularized: ThermoQuartet,
    ln_z_ratio: f64,
    d_e: f64,
    t: f64,
    asymptotic_residuals: BTreeMap<String, f64>,
) -> ComparisonReport {
    let d_f = -t * ln_z_ratio;
    let d_s = (d_e - d_f) / t;
    ComparisonReport {
        point,
        ratios: Ratios {
            z_ratio: ln_z_ratio.exp(),
            e_ratio: 1.0 + d_e / classical.mean_energy,
        },
        diffs: Diffs { d_f, d_e, d_s },
        signs: Signs {
            d_f: banded_sign(d_f, classical.free_energy),
            d_e: banded_sign(d_e, classical.mean_energy),
            d_s: banded_sign(d_s, classical.entropy),
        },
        classical,
        regularized,
        asymptotic_residuals,
    }
}

/// Differences are accumulated per direction from the ratio logarithms and
/// energy excesses, so they keep full relative accuracy at small `mu`.
pub fn compare_well(params: &PhysicalParams, geom: &BoxGeometry) -> Result<ComparisonReport> {
    let point = reduce_well(params, geom)?;
    let classical = well::well_classical(params, geom)?;
    let regularized = well::well_regularized(params, geom)?;
    let t = params.temperature;
    let n = geom.dim() as f64;

    let mut ln_ratio = 0.0;
    let mut excess = 0.0;
    let mut z_pred = 1.0;
    let mut e_pred = 0.0;
    let mut s_shift = 0.0;
    for &mu in &point.mu {
        ln_ratio += ln_ratio_1d(mu)?;
        excess += energy_excess_1d(mu)?;
        z_pred *= 1.0 - 0.5 * mu;
        e_pred += 1.0 / (1.0 - 0.5 * mu) / n;
        s_shift += 0.25 * mu;
    }
    let d_e = t * excess;
    let z_ratio = ln_ratio.exp();
    let e_ratio = 1.0 + 2.0 * excess / n;
    let d_s = excess + ln_ratio;
    let rho = crate::params::reduce_rho(params)?;

    let mut res = BTreeMap::new();
    res.insert("z_ratio_small_mu".to_string(), (z_ratio - z_pred).abs());
    res.insert("e_ratio_small_mu".to_string(), (e_ratio - e_pred).abs());
    res.insert("entropy_small_mu".to_string(), (d_s + s_shift).abs());
    res.insert(
        "kac_mean_energy".to_string(),
        (e_ratio - kac_mean_energy_ratio(geom, rho)?).abs(),
    );
    Ok(assemble(point, classical, regularized, ln_ratio, d_e, t, res))
}

pub fn compare_oscillator(params: &PhysicalParams, spec: &OscillatorSpec) -> Result<ComparisonReport> {
    let point = reduce_oscillator(params, spec)?;
    let classical = oscillator::osc_classical(params, spec)?;
    let regularized = oscillator::osc_regularized(params, spec)?;
    let t = params.temperature;
    let n = spec.dim() as f64;

    let mut ln_ratio = 0.0;
    let mut excess = 0.0;
    let mut sum_t2 = 0.0;
    let mut z_pred = 1.0;
    for &tau in &point.tau {
        ln_ratio += ln_tau_over_sinh(tau);
        excess += tau_coth_minus_one(tau);
        sum_t2 += tau * tau;
        z_pred *= 1.0 - tau * tau / 6.0;
    }
    let d_e = t * excess;
    let z_ratio = ln_ratio.exp();
    let e_ratio = 1.0 + excess / n;

    let mut res = BTreeMap::new();
    res.insert("z_ratio_tau2".to_string(), (z_ratio - z_pred).abs());
    res.insert("e_ratio_tau2".to_string(), (e_ratio - (1.0 + sum_t2 / (3.0 * n))).abs());
    // F_r - F_c ~ h^2 T Z2/Z0 = T sum tau^2 / 6
    res.insert("kw_free_energy".to_string(), (-t * ln_ratio - t * sum_t2 / 6.0).abs());
    Ok(assemble(point, classical, regularized, ln_ratio, d_e, t, res))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn zero_band() {
        assert_eq!(banded_sign(1e-11, 0.0), 0);
        assert_eq!(banded_sign(-1e-9, 0.0), -1);
        assert_eq!(banded_sign(1e-9, 1.0), 1);
        assert_eq!(banded_sign(1e-9, 100.0), 0);
    }

    #[test]
    fn well_report_matches_quartets() {
        let p = PhysicalParams::new(1.3, 0.4, 0.7).unwrap();
        let g = BoxGeometry::new(vec![1.0, 2.5]).unwrap();
        let r = compare_well(&p, &g).unwrap();
        assert_relative_eq!(r.diffs.d_f, r.regularized.free_energy - r.classical.free_energy, max_relative = 1e-9);
        assert_relative_eq!(r.diffs.d_e, r.regularized.mean_energy - r.classical.mean_energy, max_relative = 1e-9);
        assert_relative_eq!(r.diffs.d_s, r.regularized.entropy - r.classical.entropy, max_relative = 1e-9);
        assert_relative_eq!(r.ratios.z_ratio, r.regularized.z / r.classical.z, max_relative = 1e-12);
        assert_eq!(r.signs, Signs { d_f: 1, d_e: 1, d_s: -1 });
        assert_eq!(r.asymptotic_residuals.keys().collect::<Vec<_>>(), WELL_RESIDUALS.iter().collect::<Vec<_>>());
    }

    #[test]
    fn oscillator_report_example() {
        let p = PhysicalParams::new(1.0, 1.0, 1.0).unwrap();
        let s = OscillatorSpec::new(vec![2.0]).unwrap();
        let r = compare_oscillator(&p, &s).unwrap();
        assert_relative_eq!(r.ratios.e_ratio, 1.0 / 1f64.tanh(), max_relative = 1e-15);
        assert_relative_eq!(r.ratios.z_ratio, 1.0 / 1f64.sinh(), max_relative = 1e-15);
        assert_eq!(r.signs, Signs { d_f: 1, d_e: 1, d_s: 1 });
        assert_eq!(r.asymptotic_residuals.keys().collect::<Vec<_>>(), OSC_RESIDUALS.iter().collect::<Vec<_>>());
    }

    #[test]
    fn small_mu_diffs_keep_precision() {
        // mu = 1e-9: naive differences of S_r and S_c would be pure noise
        let p = PhysicalParams::new(1.0, 1e-9 / (2.0 * PI).sqrt(), 1.0).unwrap();
        let g = BoxGeometry::new(vec![1.0]).unwrap();
        let r = compare_well(&p, &g).unwrap();
        assert_relative_eq!(r.diffs.d_s, -0.25e-9, max_relative = 1e-6);
        assert_relative_eq!(r.diffs.d_f, 0.5e-9, max_relative = 1e-6);
    }
}
