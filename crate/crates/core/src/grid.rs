//! Radial grids over `[0, k]`, sampled profiles, and radial quadrature.
//!
//! Every ball integral reduces to `ω_{n-1} ∫ f(r) r^{n-1} dr`. The quadrature
//! here treats `f` as piecewise linear between nodes and integrates the weight
//! `r^w` exactly on each cell (product trapezoid), so it is exact for linear
//! `f` and second order for smooth `f`.

use crate::potential::Potential;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid radius {0} must be finite and positive")]
    InvalidRadius(f64),
    #[error("grid needs at least one cell")]
    NoCells,
    #[error("grid nodes must start at 0 and increase strictly (index {0})")]
    NotIncreasing(usize),
    #[error("sample length {found} does not match grid length {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("radius {r} lies outside the grid [0, {end}]")]
    OutOfRange { r: f64, end: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    /// Declared density, when the grid was built uniformly.
    per_unit: Option<usize>,
}

/// See [`RadialGrid::uniform`].
pub const MERGE_FRACTION: f64 = 0.25;

impl RadialGrid {
    /// Nodes at `i / per_unit` followed by `radius` itself, so grids of the
    /// same density share every node below the smaller radius. A remainder
    /// shorter than `MERGE_FRACTION` of a cell is absorbed into the previous
    /// cell instead of forming a sliver.
    pub fn uniform(radius: f64, per_unit: usize) -> Result<Self, GridError> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GridError::InvalidRadius(radius));
        }
        if per_unit == 0 {
            return Err(GridError::NoCells);
        }
        let m = per_unit as f64;
        let mut full = (radius * m).floor() as usize;
        if radius - full as f64 / m < MERGE_FRACTION / m {
            full = full.saturating_sub(1);
        }
        let mut nodes: Vec<f64> = (0..=full).map(|i| i as f64 / m).collect();
        nodes.push(radius);
        Ok(RadialGrid {
            nodes,
            per_unit: Some(per_unit),
        })
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self, GridError> {
        if nodes.len() < 2 {
            return Err(GridError::NoCells);
        }
        if nodes[0] != 0.0 {
            return Err(GridError::NotIncreasing(0));
        }
        for i in 1..nodes.len() {
            if !(nodes[i] > nodes[i - 1]) || !nodes[i].is_finite() {
                return Err(GridError::NotIncreasing(i));
            }
        }
        Ok(RadialGrid {
            nodes,
            per_unit: None,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn per_unit(&self) -> Option<usize> {
        self.per_unit
    }

    /// Largest cell width.
    pub fn max_spacing(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Index `i` of the cell `[r_i, r_{i+1}]` containing `r` (the last cell
    /// for `r = radius`).
    pub fn locate(&self, r: f64) -> Result<usize, GridError> {
        let end = self.radius();
        if !(0.0..=end).contains(&r) {
            return Err(GridError::OutOfRange { r, end });
        }
        let i = self.nodes.partition_point(|&x| x <= r);
        Ok(i.saturating_sub(1).min(self.nodes.len() - 2))
    }

    /// First node index with `r_i >= r - slack`.
    pub fn first_node_at_or_after(&self, r: f64) -> usize {
        let slack = 1e-12 * self.radius().max(1.0);
        self.nodes.partition_point(|&x| x < r - slack)
    }

    /// Linear interpolation of node values at `r`.
    pub fn interpolate(&self, values: &[f64], r: f64) -> Result<f64, GridError> {
        self.check_len(values)?;
        let i = self.locate(r)?;
        let (a, c) = (self.nodes[i], self.nodes[i + 1]);
        let t = (r - a) / (c - a);
        Ok(values[i] + t * (values[i + 1] - values[i]))
    }

    pub(crate) fn check_len(&self, values: &[f64]) -> Result<(), GridError> {
        if values.len() != self.nodes.len() {
            return Err(GridError::LengthMismatch {
                expected: self.nodes.len(),
                found: values.len(),
            });
        }
        Ok(())
    }
}

/// Sampled `u` and `u'` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub grid: RadialGrid,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
}

impl RadialProfile {
    pub fn new(grid: RadialGrid, u: Vec<f64>, du: Vec<f64>) -> Result<Self, GridError> {
        grid.check_len(&u)?;
        grid.check_len(&du)?;
        Ok(RadialProfile { grid, u, du })
    }

    pub fn constant(grid: RadialGrid, value: f64) -> Self {
        let n = grid.len();
        RadialProfile {
            grid,
            u: vec![value; n],
            du: vec![0.0; n],
        }
    }

    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn value_at(&self, r: f64) -> Result<f64, GridError> {
        self.grid.interpolate(&self.u, r)
    }

    /// Linear resampling of `u` onto `target` (which must lie within this grid).
    pub fn resample_u(&self, target: &RadialGrid) -> Result<Vec<f64>, GridError> {
        target
            .nodes()
            .iter()
            .map(|&r| self.grid.interpolate(&self.u, r))
            .collect()
    }
}

/// Exact weights `(w_a, w_c)` with
/// `∫_a^c (f_a (c-s) + f_c (s-a)) / (c-a) · s^w ds = f_a w_a + f_c w_c`.
///
/// Expanded around `a` so that every term is nonnegative.
pub fn cell_weights(a: f64, c: f64, weight_power: u32) -> (f64, f64) {
    let h = c - a;
    let w = weight_power as i32;
    let (mut wa, mut wc) = (0.0, 0.0);
    let mut binom = 1.0;
    let mut h_pow = 1.0;
    for j in 0..=w {
        let term = binom * a.powi(w - j) * h_pow;
        let jf = j as f64;
        wa += term / ((jf + 1.0) * (jf + 2.0));
        wc += term / (jf + 2.0);
        binom = binom * (w - j) as f64 / (jf + 1.0);
        h_pow *= h;
    }
    (wa * h, wc * h)
}

/// `∫ f(r) r^{weight_power} dr` over the grid, `f` linear between nodes.
pub fn integrate_radial(f: &[f64], grid: &RadialGrid, weight_power: u32) -> Result<f64, GridError> {
    Ok(*cumulative_radial(f, grid, weight_power)?.last().unwrap())
}

/// Running integrals `∫_0^{r_i} f(r) r^w dr` at every node.
pub fn cumulative_radial(
    f: &[f64],
    grid: &RadialGrid,
    weight_power: u32,
) -> Result<Vec<f64>, GridError> {
    grid.check_len(f)?;
    let nodes = grid.nodes();
    let mut out = Vec::with_capacity(nodes.len());
    let mut acc = 0.0;
    out.push(acc);
    for i in 0..nodes.len() - 1 {
        let (wa, wc) = cell_weights(nodes[i], nodes[i + 1], weight_power);
        acc += f[i] * wa + f[i + 1] * wc;
        out.push(acc);
    }
    Ok(out)
}

/// `∫_a^c s^w b(s) g(u(s)) ds` on one cell with `u` linear between `u_a` and
/// `u_c`. The cell is split at the potential's breakpoints and `b` is taken
/// from the inside of every piece, so jumps of `b` cost no accuracy.
#[allow(clippy::too_many_arguments)]
pub(crate) fn weighted_cell_integral<G: Fn(f64) -> f64>(
    potential: &Potential,
    breakpoints: &[f64],
    a: f64,
    c: f64,
    u_a: f64,
    u_c: f64,
    weight_power: u32,
    g: G,
) -> f64 {
    let h = c - a;
    let slack = 1e-12 * h;
    let lo = breakpoints.partition_point(|&x| x <= a + slack);
    let hi = breakpoints.partition_point(|&x| x < c - slack);
    let piece = |s0: f64, s1: f64, v0: f64, v1: f64| {
        let (w0, w1) = cell_weights(s0, s1, weight_power);
        let b0 = potential.eval_right(s0);
        let b1 = potential.eval_left(s1);
        let f0 = if b0 == 0.0 { 0.0 } else { b0 * g(v0) };
        let f1 = if b1 == 0.0 { 0.0 } else { b1 * g(v1) };
        f0 * w0 + f1 * w1
    };
    if lo >= hi {
        return piece(a, c, u_a, u_c);
    }
    let mut total = 0.0;
    let (mut s0, mut v0) = (a, u_a);
    for &s in &breakpoints[lo..hi] {
        let v = u_a + (s - a) / h * (u_c - u_a);
        total += piece(s0, s, v0, v);
        s0 = s;
        v0 = v;
    }
    total + piece(s0, c, v0, u_c)
}
