//! Radial boundary-value solver for
//! `-(Φ(u') r^{n-1})' + r^{n-1} b(r) |u|^{p_1-2} u = 0` on `(0, k)`,
//! `u'(0) = 0`, `u(k) = 1`.
//!
//! The ODE is integrated in its integral (flux) form
//! `Φ(u'(r)) = r^{1-n} ∫_0^r s^{n-1} b |u|^{p_1-2} u ds`, so every radial
//! derivative is an inverse flux of accumulated history.

mod march;
mod picard;
mod shooting;
mod tail;

pub use march::{flux, flux_profile, integrate_ivp};
pub use picard::{picard_solve, PicardSolution};
pub use shooting::solve_bvp;
pub use tail::{
    tail_constant_check, tail_identity_at_boundary, tail_identity_check, tail_integral,
    TailIntegral,
};

use crate::grid::{GridError, RadialProfile};
use crate::math::{Exponents, MathError};
use crate::potential::{Potential, PotentialError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Math(#[from] MathError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("terminal values u(k) = {low} at alpha = 0 and {high} at alpha = 1 do not straddle 1")]
    NoBracket { low: f64, high: f64 },
    #[error("shooting map decreases between alpha = {alpha_lo} (u(k) = {terminal_lo}) and alpha = {alpha_hi} (u(k) = {terminal_hi})")]
    NonMonotoneDetected {
        alpha_lo: f64,
        terminal_lo: f64,
        alpha_hi: f64,
        terminal_hi: f64,
    },
    #[error("bisection stalled at alpha = {alpha} with boundary residual {residual}")]
    ShootingStalled { alpha: f64, residual: f64 },
    #[error("march produced a non-finite value at r = {r}")]
    NonFinite { r: f64 },
    #[error("no convergence after {iterations} iterations (last change {residual})")]
    MaxIterExceeded {
        iterations: usize,
        residual: f64,
        last: Box<RadialProfile>,
    },
    #[error("potential is not compactly supported inside the ball")]
    NoTailRegion,
}

/// Dimension, operator and potential of one model instance.
///
/// For several exponent terms the zero-order term is `b |u|^{p_1-2} u` with the
/// smallest exponent `p_1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub n: u32,
    pub exponents: Exponents,
    pub potential: Potential,
}

impl Problem {
    pub fn new(n: u32, exponents: Exponents, potential: Potential) -> Result<Self, SolverError> {
        if n < 2 {
            return Err(MathError::InvalidDimension(n).into());
        }
        potential.validate()?;
        Ok(Problem {
            n,
            exponents,
            potential,
        })
    }

    /// Plain p-Laplacian instance.
    pub fn single(n: u32, p: f64, potential: Potential) -> Result<Self, SolverError> {
        Self::new(n, Exponents::single(p)?, potential)
    }

    /// Exponent of the zero-order term.
    pub fn p(&self) -> f64 {
        self.exponents.p_min()
    }

    pub(crate) fn weight_power(&self) -> u32 {
        self.n - 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub grid_per_unit: usize,
    /// Accepted `|u(k) - 1|`.
    pub shoot_tol: f64,
    /// Bisection stops once the alpha bracket is this narrow relative to its
    /// upper end.
    pub alpha_tol: f64,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    /// Number of evenly spaced alphas probed for monotonicity of the shooting
    /// map before bisecting; 0 disables the scan.
    pub alpha_scan: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grid_per_unit: 256,
            shoot_tol: 1e-10,
            alpha_tol: 1e-15,
            picard_tol: 1e-10,
            picard_max_iter: 100_000,
            alpha_scan: if cfg!(debug_assertions) { 8 } else { 0 },
        }
    }
}

impl SolverConfig {
    pub fn with_grid(grid_per_unit: usize) -> Self {
        SolverConfig {
            grid_per_unit,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if self.grid_per_unit < 16 {
            return Err(SolverError::InvalidConfig(format!(
                "grid_per_unit = {} is below 16",
                self.grid_per_unit
            )));
        }
        for (name, v) in [
            ("shoot_tol", self.shoot_tol),
            ("alpha_tol", self.alpha_tol),
            ("picard_tol", self.picard_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SolverError::InvalidConfig(format!(
                    "{name} = {v} must be positive"
                )));
            }
        }
        if self.picard_max_iter == 0 {
            return Err(SolverError::InvalidConfig("picard_max_iter = 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingResult {
    pub k: f64,
    pub profile: RadialProfile,
    /// `r^{1-n} ∫_0^r s^{n-1} b |u|^{p_1-2} u ds` at every node.
    pub flux: Vec<f64>,
    /// Center value `u(0)`.
    pub alpha: f64,
    /// `Φ(u') r^{n-1}` beyond the support of `b`, for compactly supported `b`.
    pub tail_constant: Option<f64>,
    pub boundary_residual: f64,
    /// Shooting-map evaluations used by bisection.
    pub iterations: usize,
}
