use thiserror::Error;

pub type Result<T> = std::result::Result<T, ThermoError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThermoError {
    /// An input violated a documented precondition.
    #[error("invalid {field}: {reason}")]
    Domain { field: &'static str, reason: String },

    /// The direct lattice sum would need too many terms at this argument.
    #[error("direct sum at mu = {mu:e} risks term overflow; use the transformed representation")]
    OverflowRisk { mu: f64 },

    /// An iterative method exhausted its budget.
    #[error("{what} did not converge after {iterations} iterations")]
    Convergence { what: &'static str, iterations: usize },

    #[error("integrand is not integrable: {0}")]
    NonIntegrable(String),

    #[error("quadrature is unstable: {0}")]
    UnstableQuadrature(String),

    #[error("edge recovery failed: {0}")]
    InversionFailure(String),

    #[error("expression error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

impl ThermoError {
    pub(crate) fn domain(field: &'static str, reason: impl Into<String>) -> Self {
        ThermoError::Domain {
            field,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        !matches!(self, ThermoError::Domain { .. } | ThermoError::Parse { .. })
    }
}
