use super::march::{march, FluxOperator, March};
use super::{Problem, ShootingResult, SolverConfig, SolverError};
use crate::grid::{RadialGrid, RadialProfile};

const MAX_BISECTIONS: usize = 200;

/// Solves `u(k) = 1` by bisection on the center value `alpha ∈ [0, 1]`.
///
/// The returned profile is the lower end of the final bracket, so
/// `u(k) <= 1` and `0 <= u <= 1` hold exactly at every node.
pub fn solve_bvp(
    k: f64,
    prob: &Problem,
    cfg: &SolverConfig,
) -> Result<ShootingResult, SolverError> {
    cfg.validate()?;
    let grid = RadialGrid::uniform(k, cfg.grid_per_unit)?;
    let op = FluxOperator::new(prob, &grid);
    let last = grid.len() - 1;

    if prob.potential.is_identically_zero() {
        let len = grid.len();
        return Ok(ShootingResult {
            k,
            profile: RadialProfile::constant(grid, 1.0),
            flux: vec![0.0; len],
            alpha: 1.0,
            tail_constant: Some(0.0),
            boundary_residual: 0.0,
            iterations: 0,
        });
    }

    let top = march(&op, 1.0)?;
    let mut iterations = 1;
    let top_terminal = top.u[last];
    if !(top_terminal >= 1.0) {
        return Err(SolverError::NoBracket {
            low: 0.0,
            high: top_terminal,
        });
    }
    if top_terminal == 1.0 {
        return finish(&op, k, 1.0, top, iterations);
    }

    if cfg.alpha_scan > 0 {
        iterations += scan_monotonicity(&op, cfg.alpha_scan, top_terminal)?;
    }

    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut best: Option<(f64, March)> = None;
    let mut residual = 1.0;
    for _ in 0..MAX_BISECTIONS {
        if residual <= cfg.shoot_tol || hi - lo <= cfg.alpha_tol * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let m = march(&op, mid)?;
        iterations += 1;
        let terminal = m.u[last];
        if terminal <= 1.0 {
            lo = mid;
            residual = 1.0 - terminal;
            best = Some((mid, m));
        } else {
            hi = mid;
        }
    }

    match best {
        Some((alpha, m)) if residual <= cfg.shoot_tol => finish(&op, k, alpha, m, iterations),
        _ => Err(SolverError::ShootingStalled {
            alpha: lo,
            residual,
        }),
    }
}

/// Probes the terminal map on an even alpha grid and fails if it decreases.
fn scan_monotonicity(
    op: &FluxOperator<'_>,
    points: usize,
    top_terminal: f64,
) -> Result<usize, SolverError> {
    let last = op.grid.len() - 1;
    let mut prev = (0.0, 0.0);
    for j in 1..=points {
        let alpha = j as f64 / (points + 1) as f64;
        let terminal = march(op, alpha)?.u[last];
        check_pair(prev, (alpha, terminal))?;
        prev = (alpha, terminal);
    }
    check_pair(prev, (1.0, top_terminal))?;
    Ok(points)
}

fn check_pair(lo: (f64, f64), hi: (f64, f64)) -> Result<(), SolverError> {
    if hi.1 < lo.1 - 1e-12 * lo.1.abs() {
        return Err(SolverError::NonMonotoneDetected {
            alpha_lo: lo.0,
            terminal_lo: lo.1,
            alpha_hi: hi.0,
            terminal_hi: hi.1,
        });
    }
    Ok(())
}

fn finish(
    op: &FluxOperator<'_>,
    k: f64,
    alpha: f64,
    m: March,
    iterations: usize,
) -> Result<ShootingResult, SolverError> {
    let last = op.grid.len() - 1;
    let boundary_residual = (m.u[last] - 1.0).abs();
    let flux = op.flux_from_accumulated(&m.accumulated);
    let tail_constant = read_tail_constant(op, &m);
    let profile = RadialProfile::new(op.grid.clone(), m.u, m.du)?;
    Ok(ShootingResult {
        k,
        profile,
        flux,
        alpha,
        tail_constant,
        boundary_residual,
        iterations,
    })
}

/// `Φ(u') r^{n-1}` one cell beyond the support radius.
fn read_tail_constant(op: &FluxOperator<'_>, m: &March) -> Option<f64> {
    let r0 = op.prob.potential.support_radius()?;
    let idx = op.grid.first_node_at_or_after(r0) + 1;
    if idx >= op.grid.len() {
        return None;
    }
    Some(op.prob.exponents.flux(m.du[idx]) * op.rpow[idx])
}
