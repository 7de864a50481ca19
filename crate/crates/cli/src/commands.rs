use serde::Serialize;
use serde_json::json;

use qcthermo::gibbs::{self, HessianCheck, LevelSet};
use qcthermo::report::{compare_oscillator, compare_well, ComparisonReport, OSC_RESIDUALS, WELL_RESIDUALS};
use qcthermo::semiclassical::{self, ConstantBox, Expr, ExpressionPotential, Harmonic, KwPrediction, PotentialField};
use qcthermo::sweeps::{self, Direction, SweepPlan, SweepResult};
use qcthermo::well::{self, ASYMPTOTIC_EPS_MAX};
use qcthermo::{BoxGeometry, OscillatorSpec, PhysicalParams, SystemSpec};

use crate::output::{Cell, Output, Table};
use crate::{Builtin, CliError, PhysicalArgs, SystemArgs, SystemKind};

/// Largest box dimension `hear-drum` accepts.
pub const MAX_DRUM_DIM: usize = 10;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn physical(args: &PhysicalArgs) -> Result<PhysicalParams, CliError> {
    Ok(PhysicalParams::new(args.temperature, args.planck, args.mass)?)
}

fn system_spec(args: &SystemArgs) -> Result<SystemSpec, CliError> {
    match args.system {
        SystemKind::Well => {
            if !args.omega.is_empty() {
                return Err(invalid("invalid omega: frequencies do not apply to --system well"));
            }
            if args.edges.is_empty() {
                return Err(invalid("invalid edges: --system well needs --edges"));
            }
            Ok(SystemSpec::Well(BoxGeometry::new(args.edges.clone())?))
        }
        SystemKind::Oscillator => {
            if !args.edges.is_empty() {
                return Err(invalid("invalid edges: edges do not apply to --system oscillator"));
            }
            if args.omega.is_empty() {
                return Err(invalid("invalid omega: --system oscillator needs --omega"));
            }
            Ok(SystemSpec::Oscillator(OscillatorSpec::new(args.omega.clone())?))
        }
    }
}

fn residual_names(system: &SystemSpec) -> &'static [&'static str] {
    match system {
        SystemSpec::Well(_) => &WELL_RESIDUALS,
        SystemSpec::Oscillator(_) => &OSC_RESIDUALS,
    }
}

const REPORT_COLUMNS: [&str; 8] = ["Z_ratio", "E_ratio", "dF", "dE", "dS", "sgn_dF", "sgn_dE", "sgn_dS"];

fn report_cells(r: &ComparisonReport, residuals: &[&str]) -> Vec<Cell> {
    let mut row: Vec<Cell> = vec![
        r.ratios.z_ratio.into(),
        r.ratios.e_ratio.into(),
        r.diffs.d_f.into(),
        r.diffs.d_e.into(),
        r.diffs.d_s.into(),
        r.signs.d_f.into(),
        r.signs.d_e.into(),
        r.signs.d_s.into(),
    ];
    row.extend(
        residuals
            .iter()
            .map(|n| r.asymptotic_residuals.get(*n).map_or(Cell::Empty, |v| Cell::Num(*v))),
    );
    row
}

fn compare(params: &PhysicalParams, system: &SystemSpec) -> Result<ComparisonReport, CliError> {
    Ok(match system {
        SystemSpec::Well(g) => compare_well(params, g)?,
        SystemSpec::Oscillator(s) => compare_oscillator(params, s)?,
    })
}

#[derive(Serialize)]
struct EvalBody<'a> {
    system: &'a SystemSpec,
    params: PhysicalParams,
    report: ComparisonReport,
    warnings: Vec<String>,
}

pub fn eval(args: &SystemArgs) -> Result<Output, CliError> {
    let system = system_spec(args)?;
    let params = physical(&args.physical)?;
    let report = compare(&params, &system)?;

    let mut warnings = Vec::new();
    if let SystemSpec::Well(_) = system {
        if report.point.eps > ASYMPTOTIC_EPS_MAX {
            warnings.push(format!(
                "eps = {} exceeds {ASYMPTOTIC_EPS_MAX}; small-mu residuals are outside their range of validity",
                report.point.eps
            ));
        }
    }

    let residuals = residual_names(&system);
    let mut header: Vec<String> = ["system", "N", "T", "h", "m", "eps", "delta"]
        .into_iter()
        .chain(["ln_Z_c", "F_c", "E_c", "S_c", "ln_Z_r", "F_r", "E_r", "S_r"])
        .chain(REPORT_COLUMNS)
        .map(String::from)
        .collect();
    header.extend(residuals.iter().map(|n| format!("res_{n}")));
    let mut table = Table::new(header);
    let (c, r) = (&report.classical, &report.regularized);
    let kind = match system {
        SystemSpec::Well(_) => "well",
        SystemSpec::Oscillator(_) => "oscillator",
    };
    let mut row: Vec<Cell> = vec![
        kind.into(),
        system.dim().into(),
        params.temperature.into(),
        params.planck.into(),
        params.mass.into(),
        report.point.eps.into(),
        report.point.delta.into(),
    ];
    for q in [c, r] {
        row.extend([q.ln_z, q.free_energy, q.mean_energy, q.entropy].map(Cell::Num));
    }
    row.extend(report_cells(&report, residuals));
    table.push(row);

    Output::new(
        "eval",
        EvalBody {
            system: &system,
            params,
            report,
            warnings,
        },
        table,
    )
}

#[derive(Serialize)]
struct SweepBody<'a> {
    system: &'a SystemSpec,
    fixed: PhysicalParams,
    grid: &'a [f64],
    result: SweepResult,
}

/// Grid ratio per direction; each step shrinks the reduced parameter
/// roughly tenfold.
fn default_factor(d: Direction) -> f64 {
    match d {
        Direction::HTo0 | Direction::OmegaTo0 => 0.1,
        Direction::TToInf | Direction::MToInf => 100.0,
        Direction::AToInf => 10.0,
        Direction::NToInf => 2.0,
    }
}

pub fn sweep(
    args: &SystemArgs,
    direction: &str,
    grid: Option<Vec<f64>>,
    start: Option<f64>,
    factor: Option<f64>,
    points: usize,
) -> Result<Output, CliError> {
    let system = system_spec(args)?;
    let fixed = physical(&args.physical)?;
    let direction = Direction::parse(direction).ok_or_else(|| {
        let names: Vec<&str> = Direction::ALL.iter().map(|d| d.name()).collect();
        invalid(format!("invalid direction: '{direction}' is not one of {}", names.join(", ")))
    })?;
    let grid = match grid {
        Some(g) => g,
        None => {
            let start = start.unwrap_or(match direction {
                Direction::HTo0 => fixed.planck,
                Direction::TToInf => fixed.temperature,
                Direction::MToInf => fixed.mass,
                Direction::OmegaTo0 | Direction::AToInf => 1.0,
                Direction::NToInf => system.dim() as f64,
            });
            sweeps::geometric_grid(start, factor.unwrap_or(default_factor(direction)), points)
        }
    };
    let plan = SweepPlan {
        system: system.clone(),
        direction,
        grid: grid.clone(),
        fixed,
    };
    let result = sweeps::run_sweep(&plan)?;

    let residuals = residual_names(&system);
    let mut header: Vec<String> = std::iter::once("swept_value").chain(REPORT_COLUMNS).map(String::from).collect();
    header.extend(residuals.iter().map(|n| format!("res_{n}")));
    header.push("error".into());
    let mut table = Table::new(header);
    for row in &result.rows {
        let mut cells = vec![Cell::Num(row.swept_value)];
        match &row.report {
            Some(r) => cells.extend(report_cells(r, residuals)),
            None => cells.extend(std::iter::repeat(Cell::Empty).take(REPORT_COLUMNS.len() + residuals.len())),
        }
        cells.push(row.error.as_deref().map_or(Cell::Empty, Cell::from));
        table.push(cells);
    }

    Output::new(
        "sweep",
        SweepBody {
            system: &system,
            fixed,
            grid: &grid,
            result,
        },
        table,
    )
}

#[derive(Serialize)]
struct DrumBody {
    true_edges: Vec<f64>,
    rhos: Vec<f64>,
    ratios: Vec<f64>,
    recovered_edges: Vec<f64>,
    coefficients: Vec<f64>,
    residual_rms: f64,
    max_abs_error: f64,
    max_rel_error: f64,
}

pub fn hear_drum(edges: &[f64], rhos: Option<Vec<f64>>) -> Result<Output, CliError> {
    if edges.len() > MAX_DRUM_DIM {
        return Err(invalid(format!(
            "invalid edges: at most {MAX_DRUM_DIM} edges are supported, got {}",
            edges.len()
        )));
    }
    let geom = BoxGeometry::new(edges.to_vec())?;
    let mut true_edges = geom.edges().to_vec();
    true_edges.sort_by(f64::total_cmp);
    let n = true_edges.len();
    let rhos = rhos.unwrap_or_else(|| well::default_rhos(true_edges[0], n));
    let samples = well::sample_ratios(&true_edges, &rhos)?;
    let rec = well::hear_the_drum_detailed(&samples, n)?;

    let mut table = Table::new(["k", "true_edge", "recovered_edge", "abs_error", "rel_error"]);
    let (mut max_abs, mut max_rel) = (0.0f64, 0.0f64);
    for (k, (a, b)) in true_edges.iter().zip(&rec.edges).enumerate() {
        let abs = (b - a).abs();
        max_abs = max_abs.max(abs);
        max_rel = max_rel.max(abs / a);
        table.push(vec![(k + 1).into(), (*a).into(), (*b).into(), abs.into(), (abs / a).into()]);
    }

    Output::new(
        "hear-drum",
        DrumBody {
            ratios: samples.iter().map(|s| s.1).collect(),
            true_edges,
            rhos,
            recovered_edges: rec.edges,
            coefficients: rec.coefficients,
            residual_rms: rec.residual_rms,
            max_abs_error: max_abs,
            max_rel_error: max_rel,
        },
        table,
    )
}

#[derive(Serialize)]
struct Distribution {
    probabilities: Vec<f64>,
    free_energy: f64,
}

#[derive(Serialize)]
struct RandomCheck {
    samples: usize,
    seed: u64,
    /// Smallest `F(P) - F_min` seen.
    min_gap: f64,
    passed: bool,
}

#[derive(Serialize)]
struct GibbsBody {
    levels: Vec<f64>,
    temperature: f64,
    tol: f64,
    ln_z: f64,
    closed_form: Distribution,
    minimized: Distribution,
    iterations: usize,
    total_variation: f64,
    free_energy_gap: f64,
    random_check: RandomCheck,
    /// Omitted when some probability underflows to zero.
    #[serde(skip_serializing_if = "Option::is_none")]
    hessian: Option<HessianCheck>,
}

pub fn gibbs(levels: Vec<f64>, t: f64, tol: f64, samples: usize, seed: u64) -> Result<Output, CliError> {
    if samples == 0 {
        return Err(invalid("invalid samples: need at least one random point"));
    }
    let levels = LevelSet::finite(levels)?;
    let closed = gibbs::gibbs_closed_form(&levels, t)?;
    let ln_z = gibbs::ln_partition(&levels, t)?;
    let f_gibbs = -t * ln_z;
    let min = gibbs::minimize_free_energy(&levels, t, tol)?;
    let min_gap = gibbs::random_minimality_gap(&levels, t, samples, seed)?;
    let hessian = if closed.probabilities.iter().all(|p| *p > 0.0) {
        Some(gibbs::hessian_check(&levels, t, &closed)?)
    } else {
        None
    };

    let mut table = Table::new(["n", "energy", "p_closed", "p_minimized"]);
    for (k, ((e, pc), pm)) in levels
        .energies
        .iter()
        .zip(&closed.probabilities)
        .zip(&min.point.probabilities)
        .enumerate()
    {
        table.push(vec![(k + 1).into(), (*e).into(), (*pc).into(), (*pm).into()]);
    }

    Output::new(
        "gibbs",
        GibbsBody {
            total_variation: closed.total_variation(&min.point),
            free_energy_gap: min.f_min - f_gibbs,
            levels: levels.energies.clone(),
            temperature: t,
            tol,
            ln_z,
            closed_form: Distribution {
                probabilities: closed.probabilities,
                free_energy: f_gibbs,
            },
            minimized: Distribution {
                probabilities: min.point.probabilities,
                free_energy: min.f_min,
            },
            iterations: min.iterations,
            random_check: RandomCheck {
                samples,
                seed,
                min_gap,
                passed: min_gap >= -1e-12 * (1.0 + f_gibbs.abs()),
            },
            hessian,
        },
        table,
    )
}

#[derive(Serialize)]
struct KwBody {
    potential: serde_json::Value,
    params: PhysicalParams,
    prediction: KwPrediction,
}

pub fn kw(
    builtin: Builtin,
    omega: Vec<f64>,
    edges: Vec<f64>,
    value: f64,
    expr: Option<&str>,
    dim: Option<usize>,
    args: &PhysicalArgs,
) -> Result<Output, CliError> {
    let unused = |flag: &str, present: bool| {
        if present {
            Err(invalid(format!("invalid {flag}: not used by this potential")))
        } else {
            Ok(())
        }
    };
    let (pot, description): (Box<dyn PotentialField>, serde_json::Value) = match builtin {
        Builtin::Harmonic => {
            unused("edges", !edges.is_empty())?;
            unused("expr", expr.is_some())?;
            if omega.is_empty() {
                return Err(invalid("invalid omega: the harmonic potential needs --omega"));
            }
            let spec = OscillatorSpec::new(omega)?;
            let d = json!({"kind": "harmonic", "omega": spec.frequencies()});
            let pot = Harmonic {
                mass: args.mass,
                omegas: spec.frequencies().to_vec(),
            };
            (Box::new(pot), d)
        }
        Builtin::Constant => {
            unused("omega", !omega.is_empty())?;
            unused("expr", expr.is_some())?;
            if edges.is_empty() {
                return Err(invalid("invalid edges: the constant potential needs --edges"));
            }
            let geom = BoxGeometry::new(edges)?;
            let d = json!({"kind": "constant", "edges": geom.edges(), "value": value});
            let pot = ConstantBox {
                value,
                edges: geom.edges().to_vec(),
            };
            (Box::new(pot), d)
        }
        Builtin::Expr => {
            unused("omega", !omega.is_empty())?;
            unused("edges", !edges.is_empty())?;
            let src = expr.ok_or_else(|| invalid("invalid expr: --potential expr needs --expr"))?;
            let e = Expr::parse(src)?;
            let dim = dim.unwrap_or(e.arity().max(1));
            let d = json!({"kind": "expr", "expr": src, "dim": dim});
            (Box::new(ExpressionPotential::from_expr(e, dim, None)?), d)
        }
    };
    if pot.dim() > semiclassical::MAX_DIM {
        return Err(invalid(format!(
            "invalid dim: at most {} dimensions are supported, got {}",
            semiclassical::MAX_DIM,
            pot.dim()
        )));
    }
    let params = physical(args)?;
    let p = semiclassical::kw_expansion(pot.as_ref(), &params)?;

    let mut table = Table::new([
        "dim",
        "z0",
        "z2",
        "z2_over_z0",
        "expansion_parameter",
        "valid",
        "z_classical",
        "f_classical",
        "e_classical",
        "s_classical",
        "zr_predicted",
        "fr_predicted",
        "er_predicted",
        "sr_predicted",
    ]);
    table.push(vec![
        pot.dim().into(),
        p.z0.into(),
        p.z2.into(),
        p.z2_over_z0.into(),
        p.expansion_parameter.into(),
        p.valid.into(),
        p.z_classical.into(),
        p.f_classical.into(),
        p.e_classical.into(),
        p.s_classical.into(),
        p.zr_predicted.into(),
        p.fr_predicted.into(),
        p.er_predicted.into(),
        p.sr_predicted.into(),
    ]);

    Output::new(
        "kw",
        KwBody {
            potential: description,
            params,
            prediction: p,
        },
        table,
    )
}
