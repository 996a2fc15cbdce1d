//! Sweeps over the ball radius `k`, extraction of the monotone limit, and the
//! classification of a problem into a Liouville regime.

mod classify;
mod sweep;

pub use classify::{classify_regime, Evidence, Regime, RegimeVerdict, ReportSummary, Thresholds};
pub use sweep::{
    extract_limit, sweep, sweep_with, AlphaTrend, LimitOutcome, SweepEntry, SweepOptions,
    SweepResult,
};

use crate::grid::GridError;
use crate::solver::SolverError;
use crate::variational::VariationalError;
use thiserror::Error;

/// Default `|alpha_last - alpha_prev|` accepted as stabilized.
pub const DEFAULT_STABILIZATION_TOL: f64 = 1e-4;
/// The nontriviality floor is this multiple of the stabilization tolerance.
pub const FLOOR_MULTIPLIER: f64 = 10.0;
/// Default bound on the boundary tail identity residual of each sweep entry.
pub const DEFAULT_CONSISTENCY_TOL: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid k list: {0}")]
    InvalidKList(String),
    #[error("solve at k = {k} failed: {source}")]
    Solver {
        k: f64,
        #[source]
        source: SolverError,
    },
    #[error(transparent)]
    Variational(#[from] VariationalError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("u at k = {k_hi} exceeds u at k = {k_lo} by {max_excess:e} at r = {r}")]
    MonotonicityViolation {
        k_lo: f64,
        k_hi: f64,
        max_excess: f64,
        r: f64,
    },
    #[error("tail identity residual {residual:e} at k = {k} exceeds {tol:e}")]
    ConsistencyViolation { k: f64, residual: f64, tol: f64 },
    #[error("invalid thread count: {0}")]
    ThreadPool(String),
}
