//! Browser bindings for three interactive views: regularized/classical
//! ratio curves for the well and the oscillator, and box-edge recovery.
//!
//! Curves come back as flat `Float64Array`s, one row after another.

use wasm_bindgen::prelude::*;

use qcthermo::oscillator::{entropy_excess, ln_tau_over_sinh, tau_coth_minus_one};
use qcthermo::well::{default_rhos, energy_excess_1d, hear_the_drum, ln_ratio_1d, sample_ratios};

/// Values per row of [`well_curves`] and [`oscillator_curves`].
pub const ROW: usize = 4;

fn grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, String> {
    if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
        return Err(format!("need 0 < lo < hi, got [{lo}, {hi}]"));
    }
    if !(2..=10_000).contains(&points) {
        return Err(format!("points must be in 2..=10000, got {points}"));
    }
    Ok((0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect())
}

/// Rows `mu, Z_r/Z_c, E_r/E_c, S_r - S_c` for a 1-D well.
pub fn well_rows(mu_lo: f64, mu_hi: f64, points: usize) -> Result<Vec<f64>, String> {
    let mut out = Vec::with_capacity(ROW * points);
    for mu in grid(mu_lo, mu_hi, points)? {
        let ln_z = ln_ratio_1d(mu).map_err(|e| e.to_string())?;
        let de = energy_excess_1d(mu).map_err(|e| e.to_string())?;
        // E_c = T/2
        out.extend([mu, ln_z.exp(), 1.0 + 2.0 * de, de + ln_z]);
    }
    Ok(out)
}

/// Rows `tau, f, g, S_r - S_c` for a 1-D oscillator.
pub fn oscillator_rows(tau_lo: f64, tau_hi: f64, points: usize) -> Result<Vec<f64>, String> {
    Ok(grid(tau_lo, tau_hi, points)?
        .into_iter()
        .flat_map(|t| [t, ln_tau_over_sinh(t).exp(), 1.0 + tau_coth_minus_one(t), entropy_excess(t)])
        .collect())
}

/// Samples `Z_r/Z_c` of the box and inverts them; returns sorted edges.
pub fn recover_edges(edges: &[f64]) -> Result<Vec<f64>, String> {
    if edges.is_empty() || edges.len() > 10 {
        return Err(format!("need 1 to 10 edges, got {}", edges.len()));
    }
    let min = edges.iter().copied().fold(f64::INFINITY, f64::min);
    let samples = sample_ratios(edges, &default_rhos(min, edges.len())).map_err(|e| e.to_string())?;
    hear_the_drum(&samples, edges.len()).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn well_curves(mu_lo: f64, mu_hi: f64, points: usize) -> Result<Vec<f64>, JsError> {
    well_rows(mu_lo, mu_hi, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn oscillator_curves(tau_lo: f64, tau_hi: f64, points: usize) -> Result<Vec<f64>, JsError> {
    oscillator_rows(tau_lo, tau_hi, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn hear_drum(edges: Vec<f64>) -> Result<Vec<f64>, JsError> {
    recover_edges(&edges).map_err(|e| JsError::new(&e))
}
