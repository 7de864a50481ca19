//! `qcthermo`: classical, quantum and regularized thermodynamics of wells and
//! oscillators from the command line.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;

use output::Format;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) | CliError::Io(m) => m,
        }
    }
}

impl From<qcthermo::ThermoError> for CliError {
    fn from(e: qcthermo::ThermoError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

/// Numeric flag values: plain numbers or constant expressions (`2pi`, `1/3`).
fn number(s: &str) -> Result<f64, String> {
    let v = qcthermo::semiclassical::parse_constant(s).map_err(|e| e.to_string())?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

#[derive(Debug, Parser)]
#[command(name = "qcthermo", version, about = "Regularized vs classical thermodynamics")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, env = "QCTHERMO_FORMAT", default_value = "json")]
    format: Format,

    /// Write to this file instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SystemKind {
    Well,
    Oscillator,
}

#[derive(Debug, Args)]
struct SystemArgs {
    #[arg(long, value_enum)]
    system: SystemKind,

    /// Box edges a_1,...,a_N (wells).
    #[arg(long, value_delimiter = ',', value_parser = number, allow_hyphen_values = true)]
    edges: Vec<f64>,

    /// Frequencies w_1,...,w_N (oscillators).
    #[arg(long, value_delimiter = ',', value_parser = number, allow_hyphen_values = true)]
    omega: Vec<f64>,

    #[command(flatten)]
    physical: PhysicalArgs,
}

#[derive(Debug, Args)]
struct PhysicalArgs {
    /// Temperature.
    #[arg(long = "T", value_parser = number, default_value = "1", allow_hyphen_values = true)]
    temperature: f64,

    /// Planck constant.
    #[arg(long = "h", value_parser = number, default_value = "1", allow_hyphen_values = true)]
    planck: f64,

    /// Particle mass.
    #[arg(long = "m", value_parser = number, default_value = "1", allow_hyphen_values = true)]
    mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Builtin {
    Harmonic,
    Constant,
    Expr,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classical and regularized quartets, ratios, signs and residuals at one point.
    Eval {
        #[command(flatten)]
        system: SystemArgs,
    },
    /// Walk one parameter towards the classical limit.
    Sweep {
        #[command(flatten)]
        system: SystemArgs,

        /// h_to_0, T_to_inf, omega_to_0, a_to_inf, m_to_inf or N_to_inf.
        #[arg(long)]
        direction: String,

        /// Explicit grid; overrides --start/--factor/--points.
        #[arg(long, value_delimiter = ',', value_parser = number, allow_hyphen_values = true)]
        grid: Option<Vec<f64>>,

        /// First grid value (defaults to the current value of the swept parameter).
        #[arg(long, value_parser = number)]
        start: Option<f64>,

        /// Ratio between successive grid values (default depends on the direction).
        #[arg(long, value_parser = number)]
        factor: Option<f64>,

        #[arg(long, default_value_t = 8)]
        points: usize,
    },
    /// Recover box edges from samples of Z_r/Z_c.
    HearDrum {
        /// True edges used to generate the samples.
        #[arg(long, value_delimiter = ',', value_parser = number, required = true, allow_hyphen_values = true)]
        edges: Vec<f64>,

        /// Sample points (default 0.19 min(edges) j / M, j = 1..M, M = 4N + 4).
        #[arg(long, value_delimiter = ',', value_parser = number, allow_hyphen_values = true)]
        rhos: Option<Vec<f64>>,
    },
    /// Minimize the free-energy functional and compare with the Gibbs distribution.
    Gibbs {
        /// Energy levels E_1,...,E_M.
        #[arg(long, value_delimiter = ',', value_parser = number, required = true, allow_hyphen_values = true)]
        levels: Vec<f64>,

        #[arg(long = "T", value_parser = number, default_value = "1", allow_hyphen_values = true)]
        temperature: f64,

        /// Distance to the minimizer at which iteration stops.
        #[arg(long, value_parser = number, default_value = "1e-12", allow_hyphen_values = true)]
        tol: f64,

        /// Random simplex points compared against the minimizer.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// First semiclassical correction for a built-in or user-defined potential.
    Kw {
        #[arg(long, value_enum)]
        potential: Builtin,

        /// Frequencies (harmonic).
        #[arg(long, value_delimiter = ',', value_parser = number, allow_hyphen_values = true)]
        omega: Vec<f64>,

        /// Box edges (constant).
        #[arg(long, value_delimiter = ',', value_parser = number, allow_hyphen_values = true)]
        edges: Vec<f64>,

        /// Potential value inside the box (constant).
        #[arg(long, value_parser = number, default_value = "0", allow_hyphen_values = true)]
        value: f64,

        /// Potential in x1..xN, e.g. "0.5*x1^2 + x2^4" (expr).
        #[arg(long, allow_hyphen_values = true)]
        expr: Option<String>,

        /// Dimension of the expression potential (defaults to the largest xk used).
        #[arg(long)]
        dim: Option<usize>,

        #[command(flatten)]
        physical: PhysicalArgs,
    },
}

fn run(cli: Cli) -> Result<Vec<u8>, CliError> {
    let out = match cli.command {
        Command::Eval { system } => commands::eval(&system)?,
        Command::Sweep {
            system,
            direction,
            grid,
            start,
            factor,
            points,
        } => commands::sweep(&system, &direction, grid, start, factor, points)?,
        Command::HearDrum { edges, rhos } => commands::hear_drum(&edges, rhos)?,
        Command::Gibbs {
            levels,
            temperature,
            tol,
            samples,
        } => commands::gibbs(levels, temperature, tol, samples, cli.seed)?,
        Command::Kw {
            potential,
            omega,
            edges,
            value,
            expr,
            dim,
            physical,
        } => commands::kw(potential, omega, edges, value, expr.as_deref(), dim, &physical)?,
    };
    output::render(&out, cli.format)
}

fn main() -> ExitCode {
    // clap reports usage errors itself with exit code 2
    let cli = Cli::parse();
    let path = cli.output.clone();
    match run(cli).and_then(|bytes| output::write(&bytes, path.as_deref())) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
