//! Classical, quantum and regularized thermodynamics of potential wells and
//! harmonic oscillators.
//!
//! The crate compares the statistical sum, free energy, mean energy and
//! entropy of a system in classical mechanics with the same quantities
//! computed from the quantum spectrum and rescaled by the phase-space cell
//! volume `(2 pi h)^N`.

pub mod error;
pub mod gibbs;
pub mod params;
pub mod quadrature;
pub mod report;
pub mod semiclassical;
pub mod sweeps;
pub mod oscillator;
pub mod theta;
pub mod well;

pub use error::{Result, ThermoError};
pub use params::*;
