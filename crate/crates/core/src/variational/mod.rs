//! Energy of radial profiles, a direct minimizer of the discrete energy, and
//! sampled checks of the ball energy estimates.

mod energy;
mod minimize;
mod verify;

pub use energy::{energy_j, EnergyBreakdown};
pub use minimize::{minimize_j, minimize_j_report, DiscreteEnergy, Minimizer, SMOOTHING_EPS};
pub use verify::{caccioppoli_verify, decay_iteration_verify, DecayReport, ReportKind, SLOPE_TOL};

use crate::grid::{GridError, RadialProfile};
use crate::math::MathError;
use crate::solver::SolverError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VariationalError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Math(#[from] MathError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("radius {radius} spans only {cells:.3} grid cells (at least 2 needed)")]
    InsufficientResolution { radius: f64, cells: f64 },
    #[error("no convergence after {iterations} iterations (optimality residual {residual})")]
    MaxIterExceeded {
        iterations: usize,
        residual: f64,
        best: Box<RadialProfile>,
    },
}
