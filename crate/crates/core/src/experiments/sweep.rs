use super::{ExperimentError, DEFAULT_CONSISTENCY_TOL};
use crate::grid::{RadialGrid, RadialProfile};
use crate::solver::{solve_bvp, tail_identity_at_boundary, Problem, ShootingResult, SolverConfig};
use crate::variational::energy_j;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Worker threads for the per-k solves; 1 runs them in order.
    pub jobs: usize,
    /// Allowed `u_{k_{j+1}} - u_{k_j}` on shared nodes; `None` means
    /// `10 · shoot_tol`.
    pub tol_mono: Option<f64>,
    /// Bound on the boundary tail identity residual of every entry.
    pub consistency_tol: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            jobs: 1,
            tol_mono: None,
            consistency_tol: DEFAULT_CONSISTENCY_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub k: f64,
    pub alpha: f64,
    pub tail_constant: Option<f64>,
    /// `J(u_k)` over the whole ball.
    pub energy: f64,
    pub boundary_residual: f64,
    /// `|1 - u(r0) - ∫_{r0}^k Φ⁻¹(C_k s^{1-n}) ds|` for compactly supported `b`.
    pub tail_identity_residual: Option<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub problem: Problem,
    pub config: SolverConfig,
    pub k_list: Vec<f64>,
    pub entries: Vec<SweepEntry>,
    pub tol_mono: f64,
    /// Grid of the smallest ball.
    pub shared_grid: RadialGrid,
    /// Every profile interpolated onto `shared_grid`, in `k_list` order.
    pub shared_profiles: Vec<Vec<f64>>,
    /// Largest `u_{k_{j+1}} - u_{k_j}` seen on shared nodes.
    pub max_monotone_excess: f64,
    /// Full solutions; not serialized.
    #[serde(skip)]
    pub results: Vec<ShootingResult>,
}

impl SweepResult {
    pub fn alphas(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.alpha).collect()
    }

    pub fn tail_constants(&self) -> Vec<Option<f64>> {
        self.entries.iter().map(|e| e.tail_constant).collect()
    }
}

/// [`sweep_with`] under default options.
pub fn sweep(
    prob: &Problem,
    k_list: &[f64],
    cfg: &SolverConfig,
) -> Result<SweepResult, ExperimentError> {
    sweep_with(prob, k_list, cfg, &SweepOptions::default())
}

fn check_k_list(k_list: &[f64]) -> Result<(), ExperimentError> {
    if k_list.len() < 3 {
        return Err(ExperimentError::InvalidKList(format!(
            "need at least 3 radii, got {}",
            k_list.len()
        )));
    }
    if k_list.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
        return Err(ExperimentError::InvalidKList(
            "radii must be positive and finite".into(),
        ));
    }
    if k_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ExperimentError::InvalidKList(
            "radii must be strictly increasing".into(),
        ));
    }
    Ok(())
}

fn solve_one(
    prob: &Problem,
    k: f64,
    cfg: &SolverConfig,
) -> Result<ShootingResult, ExperimentError> {
    solve_bvp(k, prob, cfg).map_err(|source| ExperimentError::Solver { k, source })
}

/// Solves every `k`, records `alpha_k`, `C_k` and `J(u_k)`, and checks
/// `u_{k_{j+1}} ≤ u_{k_j} + tol_mono` on the smallest grid as well as the
/// boundary tail identity of every compactly supported entry.
pub fn sweep_with(
    prob: &Problem,
    k_list: &[f64],
    cfg: &SolverConfig,
    opts: &SweepOptions,
) -> Result<SweepResult, ExperimentError> {
    check_k_list(k_list)?;
    cfg.validate().map_err(|source| ExperimentError::Solver {
        k: k_list[0],
        source,
    })?;
    let results: Vec<ShootingResult> = if opts.jobs <= 1 {
        k_list
            .iter()
            .map(|&k| solve_one(prob, k, cfg))
            .collect::<Result<_, _>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .map_err(|e| ExperimentError::ThreadPool(e.to_string()))?;
        pool.install(|| {
            k_list
                .par_iter()
                .map(|&k| solve_one(prob, k, cfg))
                .collect::<Result<Vec<_>, _>>()
        })?
    };

    let support = prob.potential.support_radius().filter(|&r0| r0 > 0.0);
    let mut entries = Vec::with_capacity(results.len());
    for res in &results {
        let energy = energy_j(&res.profile, prob, res.k)?.total;
        let tail_identity_residual = match (support, res.tail_constant) {
            (Some(r0), Some(_)) if r0 < res.k => Some(
                tail_identity_at_boundary(res, prob, r0)
                    .map_err(|source| ExperimentError::Solver { k: res.k, source })?,
            ),
            _ => None,
        };
        if let Some(residual) = tail_identity_residual {
            if residual > opts.consistency_tol {
                return Err(ExperimentError::ConsistencyViolation {
                    k: res.k,
                    residual,
                    tol: opts.consistency_tol,
                });
            }
        }
        entries.push(SweepEntry {
            k: res.k,
            alpha: res.alpha,
            tail_constant: res.tail_constant,
            energy,
            boundary_residual: res.boundary_residual,
            tail_identity_residual,
            iterations: res.iterations,
        });
    }

    let shared_grid = results[0].profile.grid.clone();
    let shared_profiles = results
        .iter()
        .map(|r| r.profile.resample_u(&shared_grid))
        .collect::<Result<Vec<_>, _>>()?;
    let tol_mono = opts.tol_mono.unwrap_or(10.0 * cfg.shoot_tol);
    let mut max_monotone_excess = f64::NEG_INFINITY;
    for (j, pair) in shared_profiles.windows(2).enumerate() {
        let (idx, excess) = pair[1]
            .iter()
            .zip(&pair[0])
            .map(|(hi, lo)| hi - lo)
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, d)| {
                if d > best.1 {
                    (i, d)
                } else {
                    best
                }
            });
        max_monotone_excess = max_monotone_excess.max(excess);
        if excess > tol_mono {
            return Err(ExperimentError::MonotonicityViolation {
                k_lo: k_list[j],
                k_hi: k_list[j + 1],
                max_excess: excess,
                r: shared_grid.nodes()[idx],
            });
        }
    }

    Ok(SweepResult {
        problem: prob.clone(),
        config: cfg.clone(),
        k_list: k_list.to_vec(),
        entries,
        tol_mono,
        shared_grid,
        shared_profiles,
        max_monotone_excess,
        results,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaTrend {
    pub alphas: Vec<f64>,
    /// `alpha_j - alpha_{j+1}`.
    pub decrements: Vec<f64>,
    pub strictly_decreasing: bool,
    /// `|alpha_last - alpha_prev|`.
    pub last_change: f64,
}

impl AlphaTrend {
    pub fn from_alphas(alphas: &[f64]) -> Self {
        let decrements: Vec<f64> = alphas.windows(2).map(|w| w[0] - w[1]).collect();
        AlphaTrend {
            alphas: alphas.to_vec(),
            strictly_decreasing: !decrements.is_empty() && decrements.iter().all(|&d| d > 0.0),
            last_change: decrements.last().map_or(0.0, |d| d.abs()),
            decrements,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LimitOutcome {
    /// The largest-k profile, taken as the approximant of the limit.
    Stabilized {
        k: f64,
        alpha: f64,
        last_change: f64,
        profile: RadialProfile,
    },
    NotStabilized {
        trend: AlphaTrend,
    },
}

impl LimitOutcome {
    pub fn is_stabilized(&self) -> bool {
        matches!(self, LimitOutcome::Stabilized { .. })
    }
}

/// Accepts the last profile once `|alpha_last - alpha_prev| ≤ stabilization_tol`.
///
/// This is a heuristic on finitely many radii; the rate of `u_k → u` is not
/// known a priori. Sweeps restored from JSON carry no full profiles, so the
/// returned profile is then the one on the shared grid.
pub fn extract_limit(sw: &SweepResult, stabilization_tol: f64) -> LimitOutcome {
    let trend = AlphaTrend::from_alphas(&sw.alphas());
    if trend.last_change > stabilization_tol {
        return LimitOutcome::NotStabilized { trend };
    }
    let last = sw.entries.len() - 1;
    let profile = match sw.results.get(last) {
        Some(res) => res.profile.clone(),
        None => {
            let u = sw.shared_profiles[last].clone();
            let du = difference_quotients(sw.shared_grid.nodes(), &u);
            RadialProfile {
                grid: sw.shared_grid.clone(),
                u,
                du,
            }
        }
    };
    LimitOutcome::Stabilized {
        k: sw.entries[last].k,
        alpha: sw.entries[last].alpha,
        last_change: trend.last_change,
        profile,
    }
}

/// Centered differences inside, one-sided at the end, zero at the center.
fn difference_quotients(nodes: &[f64], u: &[f64]) -> Vec<f64> {
    let len = nodes.len();
    let mut du = vec![0.0; len];
    for i in 1..len {
        let j = (i + 1).min(len - 1);
        du[i] = (u[j] - u[i - 1]) / (nodes[j] - nodes[i - 1]);
    }
    du
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Potential;

    #[test]
    fn zero_potential_sweep_is_flat() {
        let prob = Problem::single(3, 2.0, Potential::Zero).unwrap();
        let sw = sweep(&prob, &[2.0, 4.0, 8.0], &SolverConfig::with_grid(16)).unwrap();
        assert!(sw.alphas().iter().all(|&a| a == 1.0));
        assert!(sw.shared_profiles.iter().flatten().all(|&v| v == 1.0));
        assert!(extract_limit(&sw, 1e-4).is_stabilized());
    }

    #[test]
    fn k_list_is_validated() {
        let prob = Problem::single(3, 2.0, Potential::Zero).unwrap();
        let cfg = SolverConfig::with_grid(16);
        assert!(matches!(
            sweep(&prob, &[2.0, 4.0], &cfg),
            Err(ExperimentError::InvalidKList(_))
        ));
        assert!(matches!(
            sweep(&prob, &[2.0, 4.0, 4.0], &cfg),
            Err(ExperimentError::InvalidKList(_))
        ));
        assert!(matches!(
            sweep(&prob, &[-1.0, 4.0, 5.0], &cfg),
            Err(ExperimentError::InvalidKList(_))
        ));
    }

    #[test]
    fn parallel_matches_sequential() {
        let prob = Problem::single(3, 2.0, Potential::compact_bump(1.0, 4.0).unwrap()).unwrap();
        let cfg = SolverConfig::with_grid(16);
        let seq = sweep(&prob, &[2.0, 4.0, 8.0], &cfg).unwrap();
        let opts = SweepOptions {
            jobs: 3,
            ..Default::default()
        };
        let par = sweep_with(&prob, &[2.0, 4.0, 8.0], &cfg, &opts).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn negative_tolerance_forces_violation() {
        let prob = Problem::single(3, 2.0, Potential::compact_bump(1.0, 4.0).unwrap()).unwrap();
        let opts = SweepOptions {
            tol_mono: Some(-1.0),
            ..Default::default()
        };
        let err =
            sweep_with(&prob, &[2.0, 4.0, 8.0], &SolverConfig::with_grid(16), &opts).unwrap_err();
        assert!(matches!(err, ExperimentError::MonotonicityViolation { k_lo, .. } if k_lo == 2.0));
    }

    #[test]
    fn trend_flags() {
        let t = AlphaTrend::from_alphas(&[0.5, 0.4, 0.35]);
        assert!(t.strictly_decreasing);
        assert!((t.last_change - 0.05).abs() < 1e-15);
        assert!(!AlphaTrend::from_alphas(&[1.0, 1.0, 1.0]).strictly_decreasing);
    }
}
