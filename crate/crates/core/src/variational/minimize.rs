use super::VariationalError;
use crate::grid::{cell_weights, weighted_cell_integral, RadialGrid, RadialProfile};
use crate::math::surface_area;
use crate::solver::Problem;
use serde::{Deserialize, Serialize};

/// Smoothing width for exponents below 2.
pub const SMOOTHING_EPS: f64 = 1e-8;

const MAX_NEWTON: usize = 500;
/// Largest exponent change per continuation stage.
const CONTINUATION_STEP: f64 = 0.25;
const STAGE_TOL: f64 = 1e-6;
const STAGE_BUDGET: usize = 50;

/// `|x|^q / q`, replaced by `((x² + ε²)^{q/2} - ε^q) / q` when smoothed.
#[derive(Debug, Clone, Copy)]
struct Power {
    q: f64,
    eps: Option<f64>,
}

impl Power {
    fn new(q: f64, eps: f64) -> Self {
        Power {
            q,
            eps: (q < 2.0).then_some(eps),
        }
    }

    fn value(self, x: f64) -> f64 {
        match self.eps {
            None => x.abs().powf(self.q) / self.q,
            Some(e) => ((x * x + e * e).powf(0.5 * self.q) - e.powf(self.q)) / self.q,
        }
    }

    fn first(self, x: f64) -> f64 {
        match self.eps {
            None if x == 0.0 => 0.0,
            None => x.abs().powf(self.q - 1.0).copysign(x),
            Some(e) => x * (x * x + e * e).powf(0.5 * self.q - 1.0),
        }
    }

    fn second(self, x: f64) -> f64 {
        match self.eps {
            None if x == 0.0 => {
                if self.q == 2.0 {
                    1.0
                } else {
                    0.0
                }
            }
            None => (self.q - 1.0) * x.abs().powf(self.q - 2.0),
            Some(e) => {
                let s = x * x + e * e;
                s.powf(0.5 * self.q - 2.0) * ((self.q - 1.0) * x * x + e * e)
            }
        }
    }
}

/// Piecewise-linear discretization of
/// `G(u) = ω ∫ (Σ a_i |u'|^{p_i} / p_i + b |u|^{p_1} / p_1) r^{n-1} dr`,
/// whose stationarity condition is the weak form of the radial equation.
///
/// Slopes are constant per cell and `r^{n-1}` is integrated exactly; the
/// potential term uses `b`-weighted lumped masses at the nodes.
#[derive(Debug, Clone)]
pub struct DiscreteEnergy {
    omega: f64,
    terms: Vec<(f64, Power)>,
    zero_order: Power,
    h: Vec<f64>,
    volumes: Vec<f64>,
    masses: Vec<f64>,
    node_volumes: Vec<f64>,
    smoothing: Option<f64>,
}

impl DiscreteEnergy {
    pub fn new(prob: &Problem, grid: &RadialGrid) -> Result<Self, VariationalError> {
        Self::blended(prob, grid, 1.0)
    }

    /// Every exponent `q` replaced by `2 + t (q - 2)`.
    fn blended(prob: &Problem, grid: &RadialGrid, t: f64) -> Result<Self, VariationalError> {
        let blend = |q: f64| if t == 1.0 { q } else { 2.0 + t * (q - 2.0) };
        let nodes = grid.nodes();
        let w = prob.weight_power();
        let breakpoints = prob.potential.breakpoints();
        let len = nodes.len();
        let mut h = Vec::with_capacity(len - 1);
        let mut volumes = Vec::with_capacity(len - 1);
        let mut masses = vec![0.0; len];
        let mut node_volumes = vec![0.0; len];
        for i in 0..len - 1 {
            let (a, c) = (nodes[i], nodes[i + 1]);
            let (wa, wc) = cell_weights(a, c, w);
            h.push(c - a);
            volumes.push(wa + wc);
            node_volumes[i] += wa;
            node_volumes[i + 1] += wc;
            let mass = |ua: f64, uc: f64| {
                weighted_cell_integral(&prob.potential, &breakpoints, a, c, ua, uc, w, |v| v)
            };
            masses[i] += mass(1.0, 0.0);
            masses[i + 1] += mass(0.0, 1.0);
        }
        let terms: Vec<(f64, Power)> = prob
            .exponents
            .terms()
            .iter()
            .map(|term| {
                (
                    term.coefficient,
                    Power::new(blend(term.exponent), SMOOTHING_EPS),
                )
            })
            .collect();
        let zero_order = Power::new(blend(prob.p()), SMOOTHING_EPS);
        let smoothing = (terms.iter().any(|(_, t)| t.eps.is_some()) || zero_order.eps.is_some())
            .then_some(SMOOTHING_EPS);
        let omega = surface_area(prob.n)?;
        Ok(DiscreteEnergy {
            omega,
            terms,
            zero_order,
            h,
            volumes,
            masses,
            node_volumes: node_volumes.into_iter().map(|v| v * omega).collect(),
            smoothing,
        })
    }

    /// Smoothing width applied to exponents below 2, if any.
    pub fn smoothing(&self) -> Option<f64> {
        self.smoothing
    }

    /// `ω ∫ r^{n-1}` over each node's dual cell.
    pub fn node_volumes(&self) -> &[f64] {
        &self.node_volumes
    }

    fn slope(&self, u: &[f64], j: usize) -> f64 {
        (u[j + 1] - u[j]) / self.h[j]
    }

    fn density(&self, d: f64) -> f64 {
        self.terms.iter().map(|(a, t)| a * t.value(d)).sum()
    }

    fn flux(&self, d: f64) -> f64 {
        self.terms.iter().map(|(a, t)| a * t.first(d)).sum()
    }

    fn flux_slope(&self, d: f64) -> f64 {
        self.terms.iter().map(|(a, t)| a * t.second(d)).sum()
    }

    pub fn value(&self, u: &[f64]) -> f64 {
        let grad: f64 = (0..self.h.len())
            .map(|j| self.volumes[j] * self.density(self.slope(u, j)))
            .sum();
        let pot: f64 = u
            .iter()
            .zip(&self.masses)
            .map(|(&v, &m)| {
                if m == 0.0 {
                    0.0
                } else {
                    m * self.zero_order.value(v)
                }
            })
            .sum();
        self.omega * (grad + pot)
    }

    /// Partial derivatives with respect to every node value.
    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = u
            .iter()
            .zip(&self.masses)
            .map(|(&v, &m)| {
                if m == 0.0 {
                    0.0
                } else {
                    self.omega * m * self.zero_order.first(v)
                }
            })
            .collect();
        for j in 0..self.h.len() {
            let t = self.omega * self.volumes[j] * self.flux(self.slope(u, j)) / self.h[j];
            g[j] -= t;
            g[j + 1] += t;
        }
        g
    }

    /// Diagonal and upper off-diagonal of the (tridiagonal) Hessian.
    fn hessian(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut diag: Vec<f64> = u
            .iter()
            .zip(&self.masses)
            .map(|(&v, &m)| {
                if m == 0.0 {
                    0.0
                } else {
                    self.omega * m * self.zero_order.second(v)
                }
            })
            .collect();
        let mut off = Vec::with_capacity(self.h.len());
        for j in 0..self.h.len() {
            let t = self.omega * self.volumes[j] * self.flux_slope(self.slope(u, j))
                / (self.h[j] * self.h[j]);
            diag[j] += t;
            diag[j + 1] += t;
            off.push(-t);
        }
        (diag, off)
    }

    /// Largest free-node gradient entry, scaled by `min(1, node volume)` so it
    /// bounds both the raw partial derivative and its pointwise density.
    pub fn residual(&self, gradient: &[f64]) -> f64 {
        let free = gradient.len() - 1;
        gradient[..free]
            .iter()
            .zip(&self.node_volumes)
            .map(|(g, v)| g.abs() / v.min(1.0))
            .fold(0.0, f64::max)
    }
}

/// Solves a symmetric tridiagonal system; `off[i]` couples `i` and `i + 1`.
fn thomas(diag: &[f64], off: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 {
        return None;
    }
    c[0] = if n > 1 { off[0] / denom } else { 0.0 };
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - off[i - 1] * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return None;
        }
        if i + 1 < n {
            c[i] = off[i] / denom;
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minimizer {
    pub profile: RadialProfile,
    pub iterations: usize,
    pub residual: f64,
    /// Final discrete energy.
    pub energy: f64,
    /// Smoothing width used for exponents below 2.
    pub smoothing: Option<f64>,
}

/// Minimizes the discrete energy over node values with `u(k) = 1`.
pub fn minimize_j(
    k: f64,
    prob: &Problem,
    grid: &RadialGrid,
    tol: f64,
) -> Result<RadialProfile, VariationalError> {
    minimize_j_report(k, prob, grid, tol).map(|m| m.profile)
}

/// [`minimize_j`] with iteration count, residual and smoothing metadata.
///
/// Damped Newton on the tridiagonal Hessian starting from `u ≡ 1`; a step is
/// accepted when the energy decreases, or stays within round-off while the
/// residual shrinks, and the damping adapts by factors of ten. Exponents far
/// from 2 are reached by continuation from the quadratic problem, since the
/// Hessian degenerates where `u'` vanishes.
pub fn minimize_j_report(
    k: f64,
    prob: &Problem,
    grid: &RadialGrid,
    tol: f64,
) -> Result<Minimizer, VariationalError> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(VariationalError::InvalidArgument(format!(
            "tolerance {tol} must be positive"
        )));
    }
    if (grid.radius() - k).abs() > 1e-12 * k.max(1.0) {
        return Err(VariationalError::InvalidArgument(format!(
            "grid ends at {} but k = {k}",
            grid.radius()
        )));
    }
    let spread = prob
        .exponents
        .terms()
        .iter()
        .map(|t| (t.exponent - 2.0).abs())
        .fold(0.0, f64::max);
    let stages = (spread / CONTINUATION_STEP).ceil().max(1.0) as usize;
    let mut u = vec![1.0; grid.len()];
    let mut iterations = 0;
    for stage in 0..stages {
        let energy = DiscreteEnergy::blended(prob, grid, stage as f64 / stages as f64)?;
        let outcome = newton(&energy, u, tol.max(STAGE_TOL), STAGE_BUDGET);
        iterations += outcome.iterations;
        u = outcome.u;
    }
    let energy = DiscreteEnergy::new(prob, grid)?;
    let outcome = newton(&energy, u, tol, MAX_NEWTON);
    iterations += outcome.iterations;
    if outcome.residual > tol {
        return Err(VariationalError::MaxIterExceeded {
            iterations,
            residual: outcome.residual,
            best: Box::new(finish(grid, outcome.u)?),
        });
    }
    Ok(Minimizer {
        profile: finish(grid, outcome.u)?,
        iterations,
        residual: outcome.residual,
        energy: outcome.value,
        smoothing: energy.smoothing(),
    })
}

struct NewtonOutcome {
    u: Vec<f64>,
    value: f64,
    residual: f64,
    iterations: usize,
}

/// Damped Newton until the residual reaches `tol`, the budget runs out, or no
/// damping yields an acceptable step.
fn newton(energy: &DiscreteEnergy, mut u: Vec<f64>, tol: f64, budget: usize) -> NewtonOutcome {
    let free = u.len() - 1;
    let mut value = energy.value(&u);
    let mut g = energy.gradient(&u);
    let mut residual = energy.residual(&g);
    let mut damping = 1e-8;
    let mut iterations = 0;

    while residual > tol && iterations < budget {
        iterations += 1;
        let (diag, off) = energy.hessian(&u);
        let rhs: Vec<f64> = g[..free].iter().map(|v| -v).collect();
        let mut accepted = false;
        while damping < 1e20 {
            let damped: Vec<f64> = diag[..free]
                .iter()
                .zip(&energy.node_volumes)
                .map(|(d, v)| d + damping * d.abs().max(*v))
                .collect();
            if let Some(step) = thomas(&damped, &off[..free.saturating_sub(1)], &rhs) {
                let mut trial = u.clone();
                for (t, s) in trial.iter_mut().zip(&step) {
                    *t += s;
                }
                let trial_value = energy.value(&trial);
                let trial_g = energy.gradient(&trial);
                let trial_residual = energy.residual(&trial_g);
                let roundoff = 64.0 * f64::EPSILON * value.abs().max(f64::MIN_POSITIVE);
                if trial_value.is_finite()
                    && (trial_value < value
                        || (trial_value <= value + roundoff && trial_residual < residual))
                {
                    u = trial;
                    value = trial_value;
                    g = trial_g;
                    residual = trial_residual;
                    damping = (damping * 0.1).max(1e-12);
                    accepted = true;
                    break;
                }
            }
            damping *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    NewtonOutcome {
        u,
        value,
        residual,
        iterations,
    }
}

/// Nodal derivative as the mean of adjacent cell slopes, zero at the center.
fn finish(grid: &RadialGrid, u: Vec<f64>) -> Result<RadialProfile, VariationalError> {
    let nodes = grid.nodes();
    let len = nodes.len();
    let slopes: Vec<f64> = (0..len - 1)
        .map(|j| (u[j + 1] - u[j]) / (nodes[j + 1] - nodes[j]))
        .collect();
    let mut du = vec![0.0; len];
    for i in 1..len - 1 {
        du[i] = 0.5 * (slopes[i - 1] + slopes[i]);
    }
    du[len - 1] = slopes[len - 2];
    Ok(RadialProfile::new(grid.clone(), u, du)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Potential;

    #[test]
    fn thomas_solves_small_system() {
        let x = thomas(&[2.0, 2.0, 2.0], &[-1.0, -1.0], &[1.0, 0.0, 1.0]).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_potential_gives_constant() {
        let prob = Problem::single(3, 2.0, Potential::Zero).unwrap();
        let grid = RadialGrid::uniform(4.0, 16).unwrap();
        let m = minimize_j_report(4.0, &prob, &grid, 1e-10).unwrap();
        assert_eq!(m.iterations, 0);
        assert!(m.profile.u.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn smoothing_only_below_two() {
        let grid = RadialGrid::uniform(2.0, 16).unwrap();
        let bump = Potential::compact_bump(1.0, 4.0).unwrap();
        let e =
            DiscreteEnergy::new(&Problem::single(3, 3.0, bump.clone()).unwrap(), &grid).unwrap();
        assert_eq!(e.smoothing(), None);
        let e = DiscreteEnergy::new(&Problem::single(3, 1.5, bump).unwrap(), &grid).unwrap();
        assert_eq!(e.smoothing(), Some(SMOOTHING_EPS));
    }

    #[test]
    fn rejects_mismatched_grid() {
        let prob = Problem::single(3, 2.0, Potential::Zero).unwrap();
        let grid = RadialGrid::uniform(4.0, 16).unwrap();
        assert!(minimize_j(5.0, &prob, &grid, 1e-8).is_err());
    }
}
