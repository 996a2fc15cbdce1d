use super::sweep::{extract_limit, AlphaTrend, SweepResult};
use super::{DEFAULT_STABILIZATION_TOL, FLOOR_MULTIPLIER};
use crate::potential::DecayClass;
use crate::solver::{tail_integral, Problem, TailIntegral};
use crate::variational::{DecayReport, ReportKind};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    ConstantsOnly,
    ForcedVanishing,
    NontrivialBounded,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub stabilization_tol: f64,
    /// Nontriviality floor as a multiple of `stabilization_tol`.
    pub floor_multiplier: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            stabilization_tol: DEFAULT_STABILIZATION_TOL,
            floor_multiplier: FLOOR_MULTIPLIER,
        }
    }
}

impl Thresholds {
    pub fn with_stabilization_tol(stabilization_tol: f64) -> Self {
        Thresholds {
            stabilization_tol,
            ..Default::default()
        }
    }

    pub fn floor(&self) -> f64 {
        self.floor_multiplier * self.stabilization_tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub kind: ReportKind,
    pub fitted_slope: Option<f64>,
    pub bound_exponent: f64,
    pub pass: bool,
}

impl From<&DecayReport> for ReportSummary {
    fn from(r: &DecayReport) -> Self {
        ReportSummary {
            kind: r.kind,
            fitted_slope: r.fitted_slope,
            bound_exponent: r.bound_exponent,
            pass: r.pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub alpha_trend: AlphaTrend,
    pub stabilized: bool,
    pub floor: f64,
    pub thresholds: Thresholds,
    /// Strictly decreasing `alpha_k` that has not stabilized, or has
    /// stabilized at or below the floor.
    pub vanishing_trend: bool,
    pub tail_constants: Vec<Option<f64>>,
    /// `C_k` nonincreasing from the first to the last entry, when every entry
    /// carries one.
    pub tail_constant_nonincreasing: Option<bool>,
    /// `∫_{r0}^∞ s^{-(n-1)/(p_1-1)} ds` for compactly supported `b`.
    pub tail_integral: Option<TailIntegral>,
    /// Set when the exponents alone decide the regime (`min p_i ≥ n`).
    pub pinned_by_exponents: bool,
    /// Whether the numerical trends agree with the verdict.
    pub corroborated: bool,
    pub decay_reports: Vec<ReportSummary>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeVerdict {
    pub regime: Regime,
    pub evidence: Evidence,
}

/// Decides the regime from the problem data and the sweep, in order:
///
/// 1. `b ≡ 0`, or `min p_i ≥ n`: constants only. The numerics are reported as
///    corroboration (a vanishing trend unless `b ≡ 0`) and never override it.
/// 2. `b` decays like `r^{-ℓ}` with `ℓ < p_1` and `alpha_k` vanishes: forced
///    vanishing.
/// 3. `n > p_1`, `b` compactly supported, the tail integral finite, and
///    `alpha_k` stabilized above the floor: a nontrivial bounded solution.
/// 4. Otherwise inconclusive.
pub fn classify_regime(
    prob: &Problem,
    sw: &SweepResult,
    reports: &[DecayReport],
    thresholds: &Thresholds,
) -> RegimeVerdict {
    let n = prob.n as f64;
    let p1 = prob.p();
    let limit = extract_limit(sw, thresholds.stabilization_tol);
    let stabilized = limit.is_stabilized();
    let trend = AlphaTrend::from_alphas(&sw.alphas());
    let floor = thresholds.floor();
    let last_alpha = *trend.alphas.last().unwrap_or(&1.0);
    let vanishing_trend = trend.strictly_decreasing && (!stabilized || last_alpha <= floor);

    let tail_constants = sw.tail_constants();
    let tail_constant_nonincreasing = match (tail_constants.first(), tail_constants.last()) {
        (Some(Some(first)), Some(Some(last))) if tail_constants.iter().all(Option::is_some) => {
            Some(last <= first)
        }
        _ => None,
    };
    let class = prob.potential.decay_class();
    let tail = match (class, prob.potential.support_radius()) {
        (DecayClass::CompactSupport, Some(r0)) if r0 > 0.0 => {
            tail_integral(prob.n, p1, r0, f64::INFINITY).ok()
        }
        _ => None,
    };
    let pinned_by_exponents = p1 >= n;

    let (regime, corroborated) = if class == DecayClass::Zero {
        (
            Regime::ConstantsOnly,
            trend.alphas.iter().all(|&a| a == 1.0),
        )
    } else if pinned_by_exponents {
        (Regime::ConstantsOnly, vanishing_trend)
    } else if matches!(prob.potential, crate::potential::Potential::PowerDecay { ell, .. } if ell < p1)
        && vanishing_trend
    {
        let reports_pass = reports
            .iter()
            .filter(|r| r.kind == ReportKind::DecayIteration)
            .all(|r| r.pass);
        (Regime::ForcedVanishing, reports_pass)
    } else if n > p1
        && class == DecayClass::CompactSupport
        && tail.is_some_and(TailIntegral::is_finite)
        && stabilized
        && last_alpha > floor
    {
        (Regime::NontrivialBounded, true)
    } else {
        (Regime::Inconclusive, false)
    };

    RegimeVerdict {
        regime,
        evidence: Evidence {
            alpha_trend: trend,
            stabilized,
            floor,
            thresholds: *thresholds,
            vanishing_trend,
            tail_constants,
            tail_constant_nonincreasing,
            tail_integral: tail,
            pinned_by_exponents,
            corroborated,
            decay_reports: reports.iter().map(ReportSummary::from).collect(),
            note: "stabilization of alpha_k over finitely many radii is a heuristic".into(),
        },
    }
}
