//! Scalar flux maps of the radial p-Laplacian and related constants.
//!
//! The radial equation is written in flux form `Φ(u') r^{n-1} = F(r)`, where
//! `Φ(x) = Σ a_i |x|^{p_i-2} x`. For a single unit-coefficient term this is the
//! classical map `Ψ(x) = |x|^{p-2} x` with closed-form inverse
//! `Ψ⁻¹(y) = |y|^{1/(p-1)} sign y`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MathError {
    #[error("invalid exponent p = {0}: must be a finite real > 1")]
    InvalidExponent(f64),
    #[error("invalid coefficient a = {0}: must be a finite real > 0")]
    InvalidCoefficient(f64),
    #[error("exponent list is empty")]
    EmptyExponents,
    #[error("dimension n = {0} is below 2")]
    InvalidDimension(u32),
    #[error("tolerance {0} must be positive")]
    InvalidTolerance(f64),
    #[error("cannot bracket the inverse flux for y = {0}")]
    BracketFailure(f64),
}

fn check_exponent(p: f64) -> Result<(), MathError> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(MathError::InvalidExponent(p))
    }
}

/// `|x|^{p-2} x`.
pub fn psi(x: f64, p: f64) -> Result<f64, MathError> {
    check_exponent(p)?;
    Ok(psi_unchecked(x, p))
}

/// `|y|^{1/(p-1)} sign y`.
pub fn psi_inv(y: f64, p: f64) -> Result<f64, MathError> {
    check_exponent(p)?;
    Ok(psi_inv_unchecked(y, p))
}

#[inline]
pub(crate) fn psi_unchecked(x: f64, p: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if p == 2.0 {
        x
    } else {
        x.abs().powf(p - 1.0).copysign(x)
    }
}

#[inline]
pub(crate) fn psi_inv_unchecked(y: f64, p: f64) -> f64 {
    if y == 0.0 {
        0.0
    } else if p == 2.0 {
        y
    } else {
        y.abs().powf(1.0 / (p - 1.0)).copysign(y)
    }
}

/// One term `a |x|^{p-2} x` of a sum of p-Laplace type operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coefficient: f64,
    pub exponent: f64,
}

/// Nonempty list of `(a_i, p_i)` pairs sorted by ascending exponent.
///
/// A single term with `a = 1` is the plain p-Laplacian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Term>", into = "Vec<Term>")]
pub struct Exponents {
    terms: Vec<Term>,
}

impl TryFrom<Vec<Term>> for Exponents {
    type Error = MathError;

    fn try_from(terms: Vec<Term>) -> Result<Self, Self::Error> {
        Exponents::new(terms.into_iter().map(|t| (t.coefficient, t.exponent)))
    }
}

impl From<Exponents> for Vec<Term> {
    fn from(e: Exponents) -> Self {
        e.terms
    }
}

impl Exponents {
    pub fn new<I: IntoIterator<Item = (f64, f64)>>(terms: I) -> Result<Self, MathError> {
        let mut terms: Vec<Term> = terms
            .into_iter()
            .map(|(coefficient, exponent)| Term {
                coefficient,
                exponent,
            })
            .collect();
        if terms.is_empty() {
            return Err(MathError::EmptyExponents);
        }
        for t in &terms {
            check_exponent(t.exponent)?;
            if !(t.coefficient.is_finite() && t.coefficient > 0.0) {
                return Err(MathError::InvalidCoefficient(t.coefficient));
            }
        }
        terms.sort_by(|a, b| a.exponent.total_cmp(&b.exponent));
        Ok(Exponents { terms })
    }

    /// Plain p-Laplacian.
    pub fn single(p: f64) -> Result<Self, MathError> {
        Self::new([(1.0, p)])
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_single(&self) -> bool {
        self.terms.len() == 1
    }

    /// Smallest exponent `p_1`.
    pub fn p_min(&self) -> f64 {
        self.terms[0].exponent
    }

    pub fn p_max(&self) -> f64 {
        self.terms[self.terms.len() - 1].exponent
    }

    /// Ellipticity lower bound `λ = min a_i`.
    pub fn lambda(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coefficient)
            .fold(f64::INFINITY, f64::min)
    }

    /// `Λ = max a_i`.
    pub fn big_lambda(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coefficient)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Radial flux map `Σ a_i |x|^{p_i-2} x`.
    pub fn flux(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coefficient * psi_unchecked(x, t.exponent))
            .sum()
    }

    /// `Φ'(x) = Σ a_i (p_i - 1) |x|^{p_i - 2}`; infinite at 0 when some `p_i < 2`.
    pub fn flux_derivative(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coefficient * (t.exponent - 1.0) * x.abs().powf(t.exponent - 2.0))
            .sum()
    }

    /// Inverse of [`Exponents::flux`]. Closed form for a single term,
    /// otherwise bisection to full precision inside
    /// `min_i (|y| / (m a_i))^{1/(p_i-1)} ≤ |x| ≤ min_i (|y| / a_i)^{1/(p_i-1)}`
    /// for `m` terms, so the error is relative to `x` at every scale of `y`.
    pub fn flux_inv(&self, y: f64) -> Result<f64, MathError> {
        if let [t] = self.terms.as_slice() {
            return Ok(psi_inv_unchecked(y / t.coefficient, t.exponent));
        }
        if !y.is_finite() {
            return Err(MathError::BracketFailure(y));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        let target = y.abs();
        let m = self.terms.len() as f64;
        let bound = |share: f64| {
            self.terms
                .iter()
                .map(|t| (share / t.coefficient).powf(1.0 / (t.exponent - 1.0)))
                .fold(f64::INFINITY, f64::min)
        };
        let (mut lo, mut hi) = (bound(target / m), bound(target));
        if !(lo.is_finite() && hi.is_finite()) {
            return psi_multi_inv(y, self, DEFAULT_INVERSION_TOL);
        }
        // rounding in the powers can leave the root a few ulps outside
        lo *= 1.0 - 1e-12;
        hi *= 1.0 + 1e-12;
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.flux(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x = if target - self.flux(lo) <= self.flux(hi) - target {
            lo
        } else {
            hi
        };
        Ok(x.copysign(y))
    }
}

/// Residual tolerance of the fallback inversion in [`Exponents::flux_inv`].
pub const DEFAULT_INVERSION_TOL: f64 = 1e-15;

/// `Σ a_i |x|^{p_i-2} x`.
pub fn psi_multi(x: f64, e: &Exponents) -> f64 {
    e.flux(x)
}

/// Inverts `psi_multi` by geometric bracket expansion from `[0, max(1, |y|)]`
/// followed by bisection on `|y|`; the sign is applied afterwards so the
/// result is exactly odd.
pub fn psi_multi_inv(y: f64, e: &Exponents, tol: f64) -> Result<f64, MathError> {
    if !(tol > 0.0) {
        return Err(MathError::InvalidTolerance(tol));
    }
    if !y.is_finite() {
        return Err(MathError::BracketFailure(y));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let target = y.abs();
    let accept = tol * target.max(1.0);

    let mut lo = 0.0_f64;
    let mut hi = target.max(1.0);
    let mut expansions = 0;
    while e.flux(hi) < target {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > 2100 || !hi.is_finite() {
            return Err(MathError::BracketFailure(y));
        }
    }

    let mut x = 0.5 * (lo + hi);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        x = mid;
        let r = e.flux(mid) - target;
        if r.abs() <= accept {
            break;
        }
        if r < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(x.copysign(y))
}

/// `(n-1)`-measure of the unit sphere in `ℝⁿ`, `2π^{n/2} / Γ(n/2)`.
pub fn surface_area(n: u32) -> Result<f64, MathError> {
    if n < 2 {
        return Err(MathError::InvalidDimension(n));
    }
    // ω_{m+2} = 2π ω_m / m, seeded with ω_2 = 2π and ω_3 = 4π.
    let (mut m, mut area) = if n.is_multiple_of(2) {
        (2, 2.0 * PI)
    } else {
        (3, 4.0 * PI)
    };
    while m < n {
        area *= 2.0 * PI / m as f64;
        m += 2;
    }
    Ok(area)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn psi_examples() {
        assert_eq!(psi(2.0, 3.0).unwrap(), 4.0);
        assert_eq!(psi(-2.0, 3.0).unwrap(), -4.0);
        assert_eq!(psi(0.37, 2.0).unwrap(), 0.37);
        assert_eq!(psi(1.0, 1.0), Err(MathError::InvalidExponent(1.0)));
        assert_eq!(psi(1.0, 0.5), Err(MathError::InvalidExponent(0.5)));
    }

    #[test]
    fn psi_inv_examples() {
        assert_eq!(psi_inv(4.0, 3.0).unwrap(), 2.0);
        assert_eq!(psi_inv(0.0, 1.5).unwrap(), 0.0);
        assert_relative_eq!(
            psi_inv(-8.0, 3.0).unwrap(),
            -2.0 * 2f64.sqrt(),
            epsilon = 1e-15
        );
        assert!(psi_inv(1.0, f64::NAN).is_err());
    }

    #[test]
    fn multi_examples() {
        let e = Exponents::new([(1.0, 2.0), (1.0, 3.0)]).unwrap();
        assert_eq!(psi_multi(1.0, &e), 2.0);
        assert_eq!(psi_multi(0.0, &e), 0.0);
        assert_eq!(psi_multi_inv(0.0, &e, 1e-12).unwrap(), 0.0);
        let single = Exponents::single(2.5).unwrap();
        for x in [-3.0, -0.1, 0.0, 0.4, 7.0] {
            assert_eq!(psi_multi(x, &single), psi(x, 2.5).unwrap());
        }
    }

    #[test]
    fn multi_inverse_matches_closed_form_for_one_term() {
        for p in [1.5, 2.0, 3.0, 5.0] {
            let e = Exponents::single(p).unwrap();
            for y in [-50.0, -1.0, -1e-3, 1e-3, 0.5, 2.0, 80.0] {
                let bisected = psi_multi_inv(y, &e, 1e-14).unwrap();
                let exact = psi_inv(y, p).unwrap();
                assert!(
                    (bisected - exact).abs() <= 1e-12 * exact.abs().max(1.0),
                    "p={p} y={y}: {bisected} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn multi_inverse_round_trip_on_grid() {
        let e = Exponents::new([(1.0, 2.0), (1.0, 3.0)]).unwrap();
        let tol = 1e-14;
        for i in 0..=400 {
            let x = -10.0 + 0.05 * i as f64;
            let back = psi_multi_inv(psi_multi(x, &e), &e, tol).unwrap();
            assert!((back - x).abs() <= 1e-10, "x={x} back={back}");
        }
    }

    #[test]
    fn exponents_sorted_and_validated() {
        let e = Exponents::new([(0.5, 3.0), (2.0, 1.5)]).unwrap();
        assert_eq!(e.p_min(), 1.5);
        assert_eq!(e.p_max(), 3.0);
        assert_eq!(e.lambda(), 0.5);
        assert_eq!(e.big_lambda(), 2.0);
        assert_eq!(Exponents::new([]), Err(MathError::EmptyExponents));
        assert!(Exponents::new([(-1.0, 2.0)]).is_err());
        assert!(Exponents::new([(1.0, 1.0)]).is_err());
    }

    #[test]
    fn bracket_failure_on_non_finite_input() {
        let e = Exponents::new([(1.0, 2.0), (1.0, 3.0)]).unwrap();
        assert!(matches!(
            psi_multi_inv(f64::INFINITY, &e, 1e-12),
            Err(MathError::BracketFailure(_))
        ));
        assert!(psi_multi_inv(1.0, &e, 0.0).is_err());
    }

    #[test]
    fn surface_areas() {
        assert_eq!(surface_area(2).unwrap(), 2.0 * PI);
        assert_eq!(surface_area(3).unwrap(), 4.0 * PI);
        assert_eq!(surface_area(4).unwrap(), 2.0 * PI * PI);
        assert_relative_eq!(
            surface_area(5).unwrap(),
            8.0 * PI * PI / 3.0,
            epsilon = 1e-14
        );
        assert!(surface_area(1).is_err());
    }

    fn exponent_sets() -> impl Strategy<Value = Exponents> {
        prop::collection::vec((0.1f64..5.0, 1.05f64..6.0), 1..4)
            .prop_map(|t| Exponents::new(t).unwrap())
    }

    proptest! {
        #[test]
        fn psi_is_odd(x in -1e3f64..1e3, p in 1.01f64..8.0) {
            prop_assert_eq!(psi(-x, p).unwrap(), -psi(x, p).unwrap());
        }

        #[test]
        fn psi_round_trip(x in -1e3f64..1e3, pi in 0usize..4) {
            let p = [1.5, 2.0, 3.0, 5.0][pi];
            let back = psi_inv(psi(x, p).unwrap(), p).unwrap();
            prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(1.0));
        }

        #[test]
        fn multi_flux_odd_and_increasing(e in exponent_sets(), x1 in -20f64..20.0, dx in 1e-6f64..5.0) {
            let x2 = x1 + dx;
            prop_assert_eq!(psi_multi(-x1, &e), -psi_multi(x1, &e));
            prop_assert!(psi_multi(x1, &e) < psi_multi(x2, &e));
        }

        #[test]
        fn flux_inverse_is_relatively_exact(e in exponent_sets(), x in 1e-12f64..1e3, sign in prop::bool::ANY) {
            let x = if sign { x } else { -x };
            let back = e.flux_inv(e.flux(x)).unwrap();
            prop_assert!((back - x).abs() <= 1e-13 * x.abs(), "{} vs {}", back, x);
        }

        #[test]
        fn multi_inverse_round_trip(e in exponent_sets(), x in -10f64..10.0) {
            let y = psi_multi(x, &e);
            let back = psi_multi_inv(y, &e, 1e-14).unwrap();
            prop_assert!((psi_multi(back, &e) - y).abs() <= 1e-14 * y.abs().max(1.0) * 4.0);
            prop_assert_eq!(psi_multi_inv(-y, &e, 1e-14).unwrap(), -back);
        }
    }
}
