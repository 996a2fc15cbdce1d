use super::{Problem, SolverConfig, SolverError};
use crate::grid::{weighted_cell_integral, RadialGrid, RadialProfile};
use crate::math::psi_unchecked;

const MAX_INNER: usize = 100;

/// Source integrand `|u|^{p-2} u` of the zero-order term.
#[inline]
pub(crate) fn source(u: f64, p: f64) -> f64 {
    psi_unchecked(u, p)
}

/// Reusable per-grid data for marching and flux accumulation.
pub(crate) struct FluxOperator<'a> {
    pub prob: &'a Problem,
    pub grid: &'a RadialGrid,
    breakpoints: Vec<f64>,
    /// `r_i^{n-1}`.
    pub rpow: Vec<f64>,
}

impl<'a> FluxOperator<'a> {
    pub fn new(prob: &'a Problem, grid: &'a RadialGrid) -> Self {
        let w = prob.weight_power() as i32;
        FluxOperator {
            prob,
            grid,
            breakpoints: prob.potential.breakpoints(),
            rpow: grid.nodes().iter().map(|r| r.powi(w)).collect(),
        }
    }

    /// `∫_{r_i}^{r_{i+1}} s^{n-1} b |u|^{p-2} u ds` with `u` linear on the cell.
    #[inline]
    pub fn cell_source(&self, i: usize, u_a: f64, u_c: f64) -> f64 {
        let nodes = self.grid.nodes();
        let p = self.prob.p();
        weighted_cell_integral(
            &self.prob.potential,
            &self.breakpoints,
            nodes[i],
            nodes[i + 1],
            u_a,
            u_c,
            self.prob.weight_power(),
            |u| source(u, p),
        )
    }

    /// Radial derivative from the accumulated source `F_i`; zero at the origin.
    #[inline]
    pub fn derivative(&self, i: usize, accumulated: f64) -> Result<f64, SolverError> {
        if i == 0 || accumulated == 0.0 {
            return Ok(0.0);
        }
        Ok(self.prob.exponents.flux_inv(accumulated / self.rpow[i])?)
    }

    /// Accumulated source `F_i` at every node for a given `u`.
    pub fn accumulate(&self, u: &[f64]) -> Vec<f64> {
        let mut acc = Vec::with_capacity(u.len());
        let mut total = 0.0;
        acc.push(0.0);
        for i in 0..u.len() - 1 {
            total += self.cell_source(i, u[i], u[i + 1]);
            acc.push(total);
        }
        acc
    }

    pub fn flux_from_accumulated(&self, acc: &[f64]) -> Vec<f64> {
        acc.iter()
            .zip(&self.rpow)
            .enumerate()
            .map(|(i, (a, rp))| if i == 0 { 0.0 } else { a / rp })
            .collect()
    }
}

pub(crate) struct March {
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub accumulated: Vec<f64>,
}

/// Implicit-trapezoid march from `u(0) = alpha`, `u'(0) = 0`.
///
/// Each cell solves `u_{i+1} = u_i + h/2 (u'_i + Φ⁻¹(F_{i+1}(u_{i+1}) / r_{i+1}^{n-1}))`
/// by fixed-point iteration, where `F_{i+1}` adds the cell's source integral to
/// the history `F_i`.
pub(crate) fn march(op: &FluxOperator<'_>, alpha: f64) -> Result<March, SolverError> {
    let nodes = op.grid.nodes();
    let len = nodes.len();
    let mut u = Vec::with_capacity(len);
    let mut du = Vec::with_capacity(len);
    let mut accumulated = Vec::with_capacity(len);
    u.push(alpha);
    du.push(0.0);
    accumulated.push(0.0);

    for i in 0..len - 1 {
        let h = nodes[i + 1] - nodes[i];
        let (ui, dui, fi) = (u[i], du[i], accumulated[i]);
        let mut x = ui + h * dui;
        let mut f_next = fi;
        let mut d_next = dui;
        for _ in 0..MAX_INNER {
            f_next = fi + op.cell_source(i, ui, x);
            d_next = op.derivative(i + 1, f_next)?;
            let x_new = ui + 0.5 * h * (dui + d_next);
            let settled =
                (x_new - x).abs() <= 4.0 * f64::EPSILON * x_new.abs().max(f64::MIN_POSITIVE);
            x = x_new;
            if settled {
                f_next = fi + op.cell_source(i, ui, x);
                d_next = op.derivative(i + 1, f_next)?;
                break;
            }
        }
        if !(x.is_finite() && d_next.is_finite() && f_next.is_finite()) {
            return Err(SolverError::NonFinite { r: nodes[i + 1] });
        }
        u.push(x);
        du.push(d_next);
        accumulated.push(f_next);
    }
    Ok(March { u, du, accumulated })
}

/// Forward integration of `u' = Φ⁻¹(flux)` on `[0, k]` from `u(0) = alpha`.
pub fn integrate_ivp(
    alpha: f64,
    k: f64,
    prob: &Problem,
    cfg: &SolverConfig,
) -> Result<RadialProfile, SolverError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(SolverError::InvalidConfig(format!(
            "alpha = {alpha} outside [0, 1]"
        )));
    }
    cfg.validate()?;
    let grid = RadialGrid::uniform(k, cfg.grid_per_unit)?;
    let op = FluxOperator::new(prob, &grid);
    let m = march(&op, alpha)?;
    Ok(RadialProfile::new(grid, m.u, m.du)?)
}

/// `r^{1-n} ∫_0^r s^{n-1} b |u|^{p-2} u ds` for the sampled `u`; 0 at `r = 0`.
pub fn flux(r: f64, profile: &RadialProfile, prob: &Problem) -> Result<f64, SolverError> {
    if r == 0.0 {
        return Ok(0.0);
    }
    let grid = &profile.grid;
    let i = grid.locate(r)?;
    let op = FluxOperator::new(prob, grid);
    let u = &profile.u;
    let mut total: f64 = (0..i).map(|j| op.cell_source(j, u[j], u[j + 1])).sum();
    let a = grid.nodes()[i];
    if r > a {
        let u_r = grid.interpolate(u, r)?;
        let breakpoints = prob.potential.breakpoints();
        let p = prob.p();
        total += weighted_cell_integral(
            &prob.potential,
            &breakpoints,
            a,
            r,
            u[i],
            u_r,
            prob.weight_power(),
            |v| source(v, p),
        );
    }
    Ok(total / r.powi(prob.weight_power() as i32))
}

/// [`flux`] at every node of the profile.
pub fn flux_profile(profile: &RadialProfile, prob: &Problem) -> Vec<f64> {
    let op = FluxOperator::new(prob, &profile.grid);
    op.flux_from_accumulated(&op.accumulate(&profile.u))
}
