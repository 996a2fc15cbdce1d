use super::march::FluxOperator;
use super::{Problem, SolverConfig, SolverError};
use crate::grid::{RadialGrid, RadialProfile};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardSolution {
    pub profile: RadialProfile,
    pub iterations: usize,
    /// Sup-norm change of the final update.
    pub residual: f64,
    /// Relaxation weight in effect at exit.
    pub relaxation: f64,
}

struct Backward {
    v: Vec<f64>,
    du: Vec<f64>,
}

/// `v(r) = 1 - ∫_r^k Φ⁻¹(flux[u](s)) ds` with the trapezoid rule on the
/// grid's cells, clamped to `[0, 1]`.
fn backward_map(op: &FluxOperator<'_>, u: &[f64]) -> Result<Backward, SolverError> {
    let nodes = op.grid.nodes();
    let acc = op.accumulate(u);
    let du = acc
        .iter()
        .enumerate()
        .map(|(i, &a)| op.derivative(i, a))
        .collect::<Result<Vec<_>, _>>()?;
    let len = nodes.len();
    let mut v = vec![0.0; len];
    let mut running = 1.0;
    v[len - 1] = 1.0;
    for i in (0..len - 1).rev() {
        running -= 0.5 * (nodes[i + 1] - nodes[i]) * (du[i] + du[i + 1]);
        v[i] = running.clamp(0.0, 1.0);
    }
    Ok(Backward { v, du })
}

/// Relaxed fixed-point iteration `u ← (1-ω) u + ω T(u)` starting from `u ≡ 1`.
///
/// `T` is order-reversing, so the plain iteration oscillates once the
/// subtracted integral exceeds one. With `s = max (1 - T(1))` the weight
/// starts at `ω = 1 / (1 + s)`, which makes the linearized iteration a
/// monotone contraction; ω is halved whenever an update grows.
pub fn picard_solve(
    k: f64,
    prob: &Problem,
    cfg: &SolverConfig,
) -> Result<PicardSolution, SolverError> {
    cfg.validate()?;
    let grid = RadialGrid::uniform(k, cfg.grid_per_unit)?;
    let op = FluxOperator::new(prob, &grid);
    let len = grid.len();

    let mut u = vec![1.0; len];
    let first = backward_map(&op, &u)?;
    // unclamped 1 - T(1) at the center
    let spread: f64 = grid
        .nodes()
        .windows(2)
        .zip(first.du.windows(2))
        .map(|(r, d)| 0.5 * (r[1] - r[0]) * (d[0] + d[1]))
        .sum();
    let mut omega = 1.0 / (1.0 + spread);
    let mut previous_change = f64::INFINITY;
    let mut next = first;

    for iteration in 1..=cfg.picard_max_iter {
        let mut change = 0.0_f64;
        for (ui, &vi) in u.iter_mut().zip(&next.v) {
            let updated = (1.0 - omega) * *ui + omega * vi;
            change = change.max((updated - *ui).abs());
            *ui = updated;
        }
        if change <= cfg.picard_tol {
            let final_map = backward_map(&op, &u)?;
            return Ok(PicardSolution {
                profile: RadialProfile::new(grid, u, final_map.du)?,
                iterations: iteration,
                residual: change,
                relaxation: omega,
            });
        }
        if change > previous_change {
            omega = (0.5 * omega).max(1e-6);
        }
        previous_change = change;
        next = backward_map(&op, &u)?;
    }

    let du = backward_map(&op, &u)?.du;
    Err(SolverError::MaxIterExceeded {
        iterations: cfg.picard_max_iter,
        residual: previous_change,
        last: Box::new(RadialProfile::new(grid, u, du)?),
    })
}
