//! Quasi-classical limit sweeps and leading-order rate fits.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ThermoError};
use crate::params::{BoxGeometry, OscillatorSpec, PhysicalParams, ReducedParams, SystemSpec};
use crate::report::{compare_oscillator, compare_well, ComparisonReport};

/// Minimum number of grid points in a sweep.
pub const MIN_GRID: usize = 6;

/// Along `N -> inf` the Planck constant is scaled as `h N^{-p}` with this
/// `p`, so that `N mu_N -> 0` and the ratios approach 1.
pub const N_COUPLING_POWER: f64 = 3.0;

/// Rows whose reduced parameter is at most this enter the rate fit.
pub const FIT_REGIME: f64 = 0.05;

/// Upper bound on `N` in an `N -> inf` sweep.
pub const MAX_SWEEP_DIM: usize = 4096;

/// Serialized under the same names as [`Direction::name`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "h_to_0")]
    HTo0,
    #[serde(rename = "T_to_inf")]
    TToInf,
    /// Frequencies multiplied by the grid value.
    #[serde(rename = "omega_to_0")]
    OmegaTo0,
    /// Edges multiplied by the grid value.
    #[serde(rename = "a_to_inf")]
    AToInf,
    #[serde(rename = "m_to_inf")]
    MToInf,
    /// Edges or frequencies repeated cyclically to length `N`.
    #[serde(rename = "N_to_inf")]
    NToInf,
}

impl Direction {
    pub const ALL: [Direction; 6] = [
        Direction::HTo0,
        Direction::TToInf,
        Direction::OmegaTo0,
        Direction::AToInf,
        Direction::MToInf,
        Direction::NToInf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Direction::HTo0 => "h_to_0",
            Direction::TToInf => "T_to_inf",
            Direction::OmegaTo0 => "omega_to_0",
            Direction::AToInf => "a_to_inf",
            Direction::MToInf => "m_to_inf",
            Direction::NToInf => "N_to_inf",
        }
    }

    pub fn parse(s: &str) -> Option<Direction> {
        Direction::ALL.into_iter().find(|d| d.name().eq_ignore_ascii_case(s))
    }

    /// True when the classical limit lies at increasing grid values.
    pub fn increasing(self) -> bool {
        !matches!(self, Direction::HTo0 | Direction::OmegaTo0)
    }

    /// Directions that drive the given system to its classical limit.
    pub fn applies_to(self, system: &SystemSpec) -> bool {
        match system {
            SystemSpec::Well(_) => self != Direction::OmegaTo0,
            // oscillator ratios do not depend on m
            SystemSpec::Oscillator(_) => !matches!(self, Direction::AToInf | Direction::MToInf),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPlan {
    pub system: SystemSpec,
    pub direction: Direction,
    pub grid: Vec<f64>,
    /// Parameters held fixed (the swept one is overridden per row).
    pub fixed: PhysicalParams,
}

/// `start, start f, start f^2, ...` with `count` points.
pub fn geometric_grid(start: f64, factor: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| start * factor.powi(i as i32)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub swept_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<ComparisonReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeadingOrderFit {
    pub exponent: f64,
    /// `|y| ~ coefficient x^exponent`
    pub coefficient: f64,
    /// Sign of the `y` values (all share it).
    pub sign: i8,
    /// `exponent - expected exponent of the model`
    pub exponent_residual: f64,
    /// RMS of the log-log fit residuals.
    pub residual_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    Linear,
    Quadratic,
}

impl FitModel {
    pub fn exponent(self) -> f64 {
        match self {
            FitModel::Linear => 1.0,
            FitModel::Quadratic => 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub direction: Direction,
    pub rows: Vec<SweepRow>,
    /// `E_r/E_c - 1` against `eps` (well) or `delta` (oscillator).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_rate: Option<LeadingOrderFit>,
    /// `max(|Z_r/Z_c - 1|, |E_r/E_c - 1|)` at the row closest to the limit.
    pub final_deviation: f64,
    /// Deviations never grow when walking the grid towards the limit.
    pub monotone: bool,
    /// The three sign columns are the same on every row.
    pub signs_constant: bool,
}

fn point_for(plan: &SweepPlan, value: f64) -> Result<(PhysicalParams, SystemSpec)> {
    let base = plan.fixed;
    let mut p = base;
    let mut system = plan.system.clone();
    match plan.direction {
        Direction::HTo0 => p.planck = value,
        Direction::TToInf => p.temperature = value,
        Direction::MToInf => p.mass = value,
        Direction::AToInf => {
            if let SystemSpec::Well(g) = &plan.system {
                system = SystemSpec::Well(BoxGeometry::new(g.edges().iter().map(|a| a * value).collect())?);
            }
        }
        Direction::OmegaTo0 => {
            if let SystemSpec::Oscillator(s) = &plan.system {
                system =
                    SystemSpec::Oscillator(OscillatorSpec::new(s.frequencies().iter().map(|w| w * value).collect())?);
            }
        }
        Direction::NToInf => {
            if !(value.fract() == 0.0 && value >= 1.0 && value <= MAX_SWEEP_DIM as f64) {
                return Err(ThermoError::domain(
                    "grid",
                    format!("N must be an integer in 1..={MAX_SWEEP_DIM}, got {value}"),
                ));
            }
            let n = value as usize;
            p.planck = base.planck * value.powf(-N_COUPLING_POWER);
            system = match &plan.system {
                SystemSpec::Well(g) => {
                    SystemSpec::Well(BoxGeometry::new(g.edges().iter().copied().cycle().take(n).collect())?)
                }
                SystemSpec::Oscillator(s) => SystemSpec::Oscillator(OscillatorSpec::new(
                    s.frequencies().iter().copied().cycle().take(n).collect(),
                )?),
            };
        }
    }
    let p = PhysicalParams::new(p.temperature, p.planck, p.mass)?;
    Ok((p, system))
}

fn evaluate(plan: &SweepPlan, value: f64) -> Result<ComparisonReport> {
    let (p, system) = point_for(plan, value)?;
    match &system {
        SystemSpec::Well(g) => compare_well(&p, g),
        SystemSpec::Oscillator(s) => compare_oscillator(&p, s),
    }
}

fn validate_plan(plan: &SweepPlan) -> Result<()> {
    if !plan.direction.applies_to(&plan.system) {
        return Err(ThermoError::domain(
            "direction",
            format!("{} does not apply to this system", plan.direction.name()),
        ));
    }
    let g = &plan.grid;
    if g.len() < MIN_GRID {
        return Err(ThermoError::domain("grid", format!("need at least {MIN_GRID} points, got {}", g.len())));
    }
    if g.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(ThermoError::domain("grid", "values must be finite and > 0"));
    }
    let up = g.windows(2).all(|w| w[1] > w[0]);
    let down = g.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err(ThermoError::domain("grid", "must be strictly monotone"));
    }
    Ok(())
}

/// The reduced parameter the deviations scale with.
fn control(point: &ReducedParams) -> f64 {
    if point.mu.is_empty() {
        point.delta
    } else {
        point.eps
    }
}

/// Evaluates every grid point; a failing point becomes an error row and the
/// sweep carries on.
pub fn run_sweep(plan: &SweepPlan) -> Result<SweepResult> {
    validate_plan(plan)?;
    let rows: Vec<SweepRow> = plan
        .grid
        .iter()
        .map(|&v| match evaluate(plan, v) {
            Ok(r) => SweepRow {
                swept_value: v,
                report: Some(r),
                error: None,
            },
            Err(e) => SweepRow {
                swept_value: v,
                report: None,
                error: Some(e.to_string()),
            },
        })
        .collect();

    // walk towards the limit
    let ascending = plan.grid[1] > plan.grid[0];
    let mut ordered: Vec<&ComparisonReport> = rows.iter().filter_map(|r| r.report.as_ref()).collect();
    if ascending != plan.direction.increasing() {
        ordered.reverse();
    }
    let dev = |r: &ComparisonReport| (r.ratios.z_ratio - 1.0).abs().max((r.ratios.e_ratio - 1.0).abs());
    let monotone = ordered.windows(2).all(|w| {
        (w[1].ratios.z_ratio - 1.0).abs() <= (w[0].ratios.z_ratio - 1.0).abs()
            && (w[1].ratios.e_ratio - 1.0).abs() <= (w[0].ratios.e_ratio - 1.0).abs()
    });
    let signs_constant = ordered.windows(2).all(|w| w[0].signs == w[1].signs);
    let final_deviation = ordered.last().map(|r| dev(r)).unwrap_or(f64::NAN);

    let model = match plan.system {
        SystemSpec::Well(_) => FitModel::Linear,
        SystemSpec::Oscillator(_) => FitModel::Quadratic,
    };
    let mut pts: Vec<(f64, f64)> = ordered
        .iter()
        .map(|r| (control(&r.point), r.ratios.e_ratio - 1.0))
        .filter(|(x, y)| *x > 0.0 && *y != 0.0)
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let in_regime = pts.iter().filter(|p| p.0 <= FIT_REGIME).count().max(4).min(pts.len());
    pts.truncate(in_regime);
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let fitted_rate = fit_leading_order(&xs, &ys, model).ok();

    Ok(SweepResult {
        direction: plan.direction,
        rows,
        fitted_rate,
        final_deviation,
        monotone,
        signs_constant,
    })
}

/// `nu <= mean(mu) <= eps` and `kappa^2 <= mean(tau^2) <= delta^2`, each
/// checked when its sequence is present.
pub fn appendix_bounds_check(reduced: &ReducedParams) -> Result<bool> {
    if reduced.mu.is_empty() && reduced.tau.is_empty() {
        return Err(ThermoError::domain("reduced", "no parameter sequence to check"));
    }
    let slack = |v: f64| 4.0 * f64::EPSILON * v.abs();
    let mut ok = true;
    if !reduced.mu.is_empty() {
        let mean = reduced.mu.iter().sum::<f64>() / reduced.mu.len() as f64;
        ok &= reduced.nu <= mean + slack(mean) && mean <= reduced.eps + slack(mean);
    }
    if !reduced.tau.is_empty() {
        let mean = reduced.tau.iter().map(|t| t * t).sum::<f64>() / reduced.tau.len() as f64;
        ok &= reduced.kappa * reduced.kappa <= mean + slack(mean) && mean <= reduced.delta * reduced.delta + slack(mean);
    }
    Ok(ok)
}

/// Least squares of `ln|y|` against `ln x`.
pub fn fit_leading_order(xs: &[f64], ys: &[f64], model: FitModel) -> Result<LeadingOrderFit> {
    if xs.len() != ys.len() || xs.len() < 4 {
        return Err(ThermoError::domain("fit", "need at least 4 (x, y) pairs of equal length"));
    }
    if xs.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(ThermoError::domain("fit", "x values must be finite and > 0"));
    }
    if ys.iter().any(|y| !y.is_finite() || y.abs() < f64::MIN_POSITIVE) {
        return Err(ThermoError::domain("fit", "y values must be finite and nonzero (degenerate data)"));
    }
    let sign = ys[0].signum();
    if ys.iter().any(|y| y.signum() != sign) {
        return Err(ThermoError::domain("fit", "y values change sign"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.abs().ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(ThermoError::domain("fit", "x values must not all coincide"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(LeadingOrderFit {
        exponent: slope,
        coefficient: intercept.exp(),
        sign: sign as i8,
        exponent_residual: slope - model.exponent(),
        residual_norm: (rss / n).sqrt(),
    })
}
