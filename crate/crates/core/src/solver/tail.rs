//! Far-field analysis outside the support of `b`, where `Φ(u') r^{n-1}` is a
//! constant `C_k` and `u(r) - u(r0) = ∫_{r0}^r Φ⁻¹(C_k s^{1-n}) ds`.

use super::{Problem, ShootingResult, SolverError};
use crate::math::MathError;
use serde::{Deserialize, Serialize};

/// Relative deviations are measured against `max(C_k, TAIL_FLOOR)`.
pub const TAIL_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailIntegral {
    Finite(f64),
    Divergent,
}

impl TailIntegral {
    pub fn value(self) -> Option<f64> {
        match self {
            TailIntegral::Finite(v) => Some(v),
            TailIntegral::Divergent => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, TailIntegral::Finite(_))
    }
}

/// `∫_{r0}^r s^{-(n-1)/(p-1)} ds`; pass `f64::INFINITY` for the improper
/// integral, which converges exactly when `n > p`.
pub fn tail_integral(n: u32, p: f64, r0: f64, r: f64) -> Result<TailIntegral, SolverError> {
    if n < 2 {
        return Err(MathError::InvalidDimension(n).into());
    }
    if !(p.is_finite() && p > 1.0) {
        return Err(MathError::InvalidExponent(p).into());
    }
    if !(r0 > 0.0 && r0.is_finite()) || !(r >= r0) {
        return Err(SolverError::InvalidConfig(format!(
            "tail integral needs 0 < r0 <= r, got r0 = {r0}, r = {r}"
        )));
    }
    let m = (n as f64 - 1.0) / (p - 1.0);
    let logarithmic = (m - 1.0).abs() <= 1e-12;
    if r.is_infinite() {
        return Ok(if m > 1.0 && !logarithmic {
            TailIntegral::Finite(r0.powf(1.0 - m) / (m - 1.0))
        } else {
            TailIntegral::Divergent
        });
    }
    let value = if logarithmic {
        (r / r0).ln()
    } else {
        (r.powf(1.0 - m) - r0.powf(1.0 - m)) / (1.0 - m)
    };
    Ok(TailIntegral::Finite(value))
}

// 5-point Gauss–Legendre on [-1, 1].
const GL_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

/// `∫_{r0}^r Φ⁻¹(C s^{1-n}) ds`: closed form for one term, Gauss–Legendre
/// over unit-or-smaller panels otherwise.
fn tail_increment(prob: &Problem, c: f64, r0: f64, r: f64) -> Result<f64, SolverError> {
    if r <= r0 || c == 0.0 {
        return Ok(0.0);
    }
    if let [t] = prob.exponents.terms() {
        let scale = crate::math::psi_inv_unchecked(c / t.coefficient, t.exponent);
        let t_int = tail_integral(prob.n, t.exponent, r0, r)?
            .value()
            .unwrap_or(f64::INFINITY);
        return Ok(scale * t_int);
    }
    let w = prob.weight_power() as i32;
    let panels = ((r - r0) * 8.0).ceil().max(1.0) as usize;
    let h = (r - r0) / panels as f64;
    let mut total = 0.0;
    for j in 0..panels {
        let mid = r0 + (j as f64 + 0.5) * h;
        for (x, wt) in GL_NODES.iter().zip(GL_WEIGHTS) {
            let s = mid + 0.5 * h * x;
            total += 0.5 * h * wt * prob.exponents.flux_inv(c / s.powi(w))?;
        }
    }
    Ok(total)
}

fn tail_inputs(res: &ShootingResult, prob: &Problem, r0: f64) -> Result<(f64, usize), SolverError> {
    let c = res.tail_constant.ok_or(SolverError::NoTailRegion)?;
    if r0 > res.k {
        return Err(SolverError::NoTailRegion);
    }
    if prob
        .potential
        .support_radius()
        .is_none_or(|s| s > r0 + 1e-12 * r0.max(1.0))
    {
        return Err(SolverError::NoTailRegion);
    }
    let start = res.profile.grid.first_node_at_or_after(r0);
    Ok((c, start))
}

/// Largest relative deviation of `Φ(u') r^{n-1}` from `C_k` over the nodes in
/// `[r0 + h, k]`.
pub fn tail_constant_check(
    res: &ShootingResult,
    prob: &Problem,
    r0: f64,
) -> Result<f64, SolverError> {
    let (c, start) = tail_inputs(res, prob, r0)?;
    let nodes = res.profile.nodes();
    let w = prob.weight_power() as i32;
    let scale = c.max(TAIL_FLOOR);
    Ok(((start + 1)..nodes.len())
        .map(|i| (prob.exponents.flux(res.profile.du[i]) * nodes[i].powi(w) - c).abs() / scale)
        .fold(0.0, f64::max))
}

/// Largest `|u(r) - u(r0) - ∫_{r0}^r Φ⁻¹(C_k s^{1-n}) ds|` over tail nodes.
pub fn tail_identity_check(
    res: &ShootingResult,
    prob: &Problem,
    r0: f64,
) -> Result<f64, SolverError> {
    let (c, start) = tail_inputs(res, prob, r0)?;
    let prof = &res.profile;
    let u0 = prof.value_at(r0)?;
    let mut worst = 0.0_f64;
    for i in start..prof.grid.len() {
        let r = prof.nodes()[i];
        let predicted = tail_increment(prob, c, r0, r)?;
        worst = worst.max((prof.u[i] - u0 - predicted).abs());
    }
    Ok(worst)
}

/// `|1 - u(r0) - ∫_{r0}^k Φ⁻¹(C_k s^{1-n}) ds|`, the identity at `r = k`.
pub fn tail_identity_at_boundary(
    res: &ShootingResult,
    prob: &Problem,
    r0: f64,
) -> Result<f64, SolverError> {
    let (c, _) = tail_inputs(res, prob, r0)?;
    let u0 = res.profile.value_at(r0)?;
    Ok((1.0 - u0 - tail_increment(prob, c, r0, res.k)?).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Potential;
    use crate::solver::{solve_bvp, SolverConfig};
    use approx::assert_relative_eq;

    #[test]
    fn closed_form_examples() {
        assert_eq!(
            tail_integral(3, 2.0, 1.0, f64::INFINITY).unwrap(),
            TailIntegral::Finite(1.0)
        );
        assert_eq!(
            tail_integral(2, 2.0, 1.0, f64::INFINITY).unwrap(),
            TailIntegral::Divergent
        );
        assert_eq!(
            tail_integral(3, 3.0, 1.0, f64::INFINITY).unwrap(),
            TailIntegral::Divergent
        );
        assert_eq!(
            tail_integral(2, 3.0, 1.0, f64::INFINITY).unwrap(),
            TailIntegral::Divergent
        );
        assert_eq!(
            tail_integral(3, 2.0, 1.0, 2.0).unwrap(),
            TailIntegral::Finite(0.5)
        );
        let TailIntegral::Finite(v) = tail_integral(2, 2.0, 1.0, 8.0).unwrap() else {
            panic!()
        };
        assert_relative_eq!(v, 8f64.ln(), epsilon = 1e-15);
        assert!(tail_integral(2, 1.5, 1.0, f64::INFINITY)
            .unwrap()
            .is_finite());
        assert!(tail_integral(3, 2.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn finite_exactly_when_n_exceeds_p() {
        for n in 2..=6u32 {
            for p in [1.25, 1.5, 2.0, 2.5, 3.0, 4.0, 5.5, 6.0, 7.0] {
                let finite = tail_integral(n, p, 1.0, f64::INFINITY).unwrap().is_finite();
                assert_eq!(finite, n as f64 > p, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn zero_potential_tails_vanish() {
        let prob = Problem::single(3, 2.0, Potential::Zero).unwrap();
        let res = solve_bvp(4.0, &prob, &SolverConfig::with_grid(16)).unwrap();
        assert_eq!(tail_constant_check(&res, &prob, 1.0).unwrap(), 0.0);
        assert_eq!(tail_identity_check(&res, &prob, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn power_decay_has_no_tail() {
        let prob = Problem::single(3, 2.0, Potential::power_decay(1.0, 1.0).unwrap()).unwrap();
        let res = solve_bvp(4.0, &prob, &SolverConfig::with_grid(16)).unwrap();
        assert!(matches!(
            tail_constant_check(&res, &prob, 1.0),
            Err(SolverError::NoTailRegion)
        ));
    }
}
