use super::VariationalError;
use crate::grid::{cell_weights, weighted_cell_integral, RadialProfile};
use crate::math::surface_area;
use crate::solver::Problem;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// `ω ∫ Σ a_i |u'|^{p_i} r^{n-1} dr`.
    pub gradient_term: f64,
    /// `ω ∫ b |u|^{p_1} r^{n-1} dr`.
    pub potential_term: f64,
    pub total: f64,
    /// Radii of `cumulative`: the grid nodes below `upto`, then `upto`.
    pub radii: Vec<f64>,
    /// Energy of the ball `B_r` for every entry of `radii`.
    pub cumulative: Vec<f64>,
}

/// Energy `J` of the profile over the ball `B_upto`.
///
/// Nodal `u'` and `Σ a_i |u'|^{p_i}` are interpolated linearly, the potential
/// term integrates `b |u|^{p_1}` with `u` linear on each cell; the weight
/// `r^{n-1}` is integrated exactly in both.
pub fn energy_j(
    profile: &RadialProfile,
    prob: &Problem,
    upto: f64,
) -> Result<EnergyBreakdown, VariationalError> {
    let coefficients: Vec<f64> = prob
        .exponents
        .terms()
        .iter()
        .map(|t| t.coefficient)
        .collect();
    ball_energy(profile, prob, &coefficients, upto)
}

/// Same as [`energy_j`] with the gradient coefficients replaced.
pub(crate) fn ball_energy(
    profile: &RadialProfile,
    prob: &Problem,
    coefficients: &[f64],
    upto: f64,
) -> Result<EnergyBreakdown, VariationalError> {
    let grid = &profile.grid;
    let nodes = grid.nodes();
    if !(upto >= 0.0 && upto <= grid.radius()) {
        return Err(VariationalError::InvalidArgument(format!(
            "energy radius {upto} outside [0, {}]",
            grid.radius()
        )));
    }
    let omega = surface_area(prob.n)?;
    let w = prob.weight_power();
    let p1 = prob.p();
    let breakpoints = prob.potential.breakpoints();
    let terms = prob.exponents.terms();
    let density = |d: f64| -> f64 {
        terms
            .iter()
            .zip(coefficients)
            .map(|(t, c)| c * d.abs().powf(t.exponent))
            .sum()
    };
    let source = |v: f64| v.abs().powf(p1);

    let mut radii = vec![0.0];
    let mut cumulative = vec![0.0];
    let (mut grad, mut pot) = (0.0, 0.0);
    for i in 0..nodes.len() - 1 {
        let (a, c) = (nodes[i], nodes[i + 1]);
        if a >= upto {
            break;
        }
        let (end, u_end, du_end) = if c <= upto {
            (c, profile.u[i + 1], profile.du[i + 1])
        } else {
            let t = (upto - a) / (c - a);
            (
                upto,
                profile.u[i] + t * (profile.u[i + 1] - profile.u[i]),
                profile.du[i] + t * (profile.du[i + 1] - profile.du[i]),
            )
        };
        let (wa, wc) = cell_weights(a, end, w);
        grad += omega * (density(profile.du[i]) * wa + density(du_end) * wc);
        pot += omega
            * weighted_cell_integral(
                &prob.potential,
                &breakpoints,
                a,
                end,
                profile.u[i],
                u_end,
                w,
                source,
            );
        radii.push(end);
        cumulative.push(grad + pot);
    }
    Ok(EnergyBreakdown {
        gradient_term: grad,
        potential_term: pot,
        total: grad + pot,
        radii,
        cumulative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;
    use crate::potential::Potential;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn bump() -> Problem {
        Problem::single(3, 2.0, Potential::compact_bump(1.0, 4.0).unwrap()).unwrap()
    }

    #[test]
    fn zero_profile_has_zero_energy() {
        let grid = RadialGrid::uniform(4.0, 16).unwrap();
        let e = energy_j(&RadialProfile::constant(grid, 0.0), &bump(), 4.0).unwrap();
        assert_eq!(e.total, 0.0);
        assert!(e.cumulative.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_one_costs_integral_of_b() {
        let grid = RadialGrid::uniform(4.0, 16).unwrap();
        let e = energy_j(&RadialProfile::constant(grid, 1.0), &bump(), 4.0).unwrap();
        assert_eq!(e.gradient_term, 0.0);
        assert_relative_eq!(e.total, 4.0 * PI * 4.0 / 3.0, max_relative = 1e-14);
        assert_eq!(e.radii.len(), e.cumulative.len());
    }

    #[test]
    fn partial_ball_ends_at_requested_radius() {
        let grid = RadialGrid::uniform(4.0, 16).unwrap();
        let e = energy_j(&RadialProfile::constant(grid, 1.0), &bump(), 0.7).unwrap();
        assert_eq!(*e.radii.last().unwrap(), 0.7);
        assert_relative_eq!(e.total, 4.0 * PI * 4.0 * 0.343 / 3.0, max_relative = 1e-13);
        assert!(energy_j(
            &RadialProfile::constant(RadialGrid::uniform(1.0, 16).unwrap(), 1.0),
            &bump(),
            2.0
        )
        .is_err());
    }
}
