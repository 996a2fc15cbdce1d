//! Bounded radial solutions of `-Δ_p u + b(|x|) |u|^{p-2} u = 0` in `ℝⁿ`.
//!
//! Ball solutions `u_k` with `u_k = 1` on `∂B_k` are computed by shooting on
//! the radial flux identity, cross-checked by a relaxed Picard iteration and
//! by direct minimization of the energy, and then swept in `k` to study the
//! monotone limit `k → ∞` and which Liouville regime a problem falls into.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod experiments;
pub mod grid;
pub mod io;
pub mod math;
pub mod potential;
pub mod solver;
pub mod variational;

pub use grid::{integrate_radial, RadialGrid, RadialProfile};
pub use math::{psi, psi_inv, psi_multi, psi_multi_inv, surface_area, Exponents};
pub use potential::Potential;
pub use solver::{Problem, ShootingResult, SolverConfig, SolverError};
