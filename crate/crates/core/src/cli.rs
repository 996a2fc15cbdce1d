//! Command-line front end: configuration parsing, the pipelines behind each
//! subcommand, and the mapping of failures to exit codes.
//!
//! Exit codes: 0 success, 1 file system, 2 configuration, 3 solver,
//! 4 failed verification.

use crate::experiments::{
    classify_regime, extract_limit, sweep_with, AlphaTrend, ExperimentError, LimitOutcome,
    RegimeVerdict, SweepOptions, SweepResult, Thresholds, DEFAULT_STABILIZATION_TOL,
};
use crate::grid::RadialProfile;
use crate::io::{profile_file_name, ArtifactWriter, IoError};
use crate::math::{Exponents, MathError};
use crate::potential::{Potential, PotentialError};
use crate::solver::{picard_solve, solve_bvp, Problem, ShootingResult, SolverConfig, SolverError};
use crate::variational::{
    caccioppoli_verify, decay_iteration_verify, energy_j, minimize_j_report, DecayReport,
    VariationalError,
};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use std::path::PathBuf;
use thiserror::Error;

/// Environment variable that overrides `--out`.
pub const OUT_ENV: &str = "PLIOUVILLE_OUT";
pub const DEFAULT_OUT: &str = "out";
pub const DEFAULT_MINIMIZE_TOL: f64 = 1e-6;
const MAX_AUTO_HALVINGS: usize = 4;
pub const CACCIOPPOLI_MIN_RADIUS: f64 = 4.0;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("unexpected token `{token}`: {reason}")]
    Grammar { token: String, reason: String },
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Math(#[from] MathError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Variational(#[from] VariationalError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("verification failed ({invariant}): {detail}")]
    Verification { invariant: String, detail: String },
    #[error(transparent)]
    Io(#[from] IoError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_)
            | CliError::Grammar { .. }
            | CliError::Potential(_)
            | CliError::Math(_) => 2,
            CliError::Solver(
                SolverError::InvalidConfig(_) | SolverError::Math(_) | SolverError::Potential(_),
            ) => 2,
            CliError::Solver(_) => 3,
            CliError::Variational(VariationalError::InvalidArgument(_))
            | CliError::Variational(VariationalError::InsufficientResolution { .. }) => 2,
            CliError::Variational(_) => 3,
            CliError::Experiment(ExperimentError::InvalidKList(_)) => 2,
            CliError::Experiment(ExperimentError::MonotonicityViolation { .. })
            | CliError::Experiment(ExperimentError::ConsistencyViolation { .. }) => 4,
            CliError::Experiment(_) => 3,
            CliError::Verification { .. } => 4,
            CliError::Io(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self.exit_code() {
            1 => "io",
            2 => "config",
            3 => "solver",
            _ => "verification",
        }
    }

    fn invariant(&self) -> Option<String> {
        match self {
            CliError::Verification { invariant, .. } => Some(invariant.clone()),
            CliError::Experiment(ExperimentError::MonotonicityViolation { .. }) => {
                Some("monotonicity_in_k".into())
            }
            CliError::Experiment(ExperimentError::ConsistencyViolation { .. }) => {
                Some("tail_identity".into())
            }
            _ => None,
        }
    }

    /// Machine-readable error object.
    pub fn to_json(&self) -> Value {
        json!({
            "error": {
                "kind": self.kind(),
                "exit_code": self.exit_code(),
                "invariant": self.invariant(),
                "message": self.to_string(),
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Construct,
    Sweep,
    Classify,
    Decay,
    OracleCheck,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Construct => "construct",
            CommandKind::Sweep => "sweep",
            CommandKind::Classify => "classify",
            CommandKind::Decay => "decay",
            CommandKind::OracleCheck => "oracle-check",
        }
    }

    fn takes_k_list(self) -> bool {
        matches!(self, CommandKind::Sweep | CommandKind::Classify)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "pliouville",
    version,
    about = "Radial p-Laplace Schrödinger solutions and Liouville-regime diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one ball problem and write its profile.
    Construct(RunArgs),
    /// Solve a list of balls and check monotonicity in k.
    Sweep(RunArgs),
    /// Sweep, then decide the Liouville regime.
    Classify(RunArgs),
    /// Solve one ball problem and check the energy decay estimates.
    Decay(RunArgs),
    /// Cross-check shooting against Picard iteration and direct minimization.
    OracleCheck(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Space dimension.
    #[arg(long)]
    n: u32,
    /// Exponents with unit coefficients, e.g. `2` or `2+3`.
    #[arg(long, conflicts_with = "terms", required_unless_present = "terms")]
    p: Option<String>,
    /// Coefficient×exponent terms, e.g. `1x2,0.5x3`.
    #[arg(long)]
    terms: Option<String>,
    /// `zero`, `compact:r0=..,beta=..`, `power:c=..,ell=..` or `table:<path>`.
    #[arg(long)]
    potential: String,
    /// Ball radius.
    #[arg(long, conflicts_with = "k_list")]
    k: Option<f64>,
    /// Comma-separated increasing ball radii.
    #[arg(long)]
    k_list: Option<String>,
    #[arg(long)]
    grid_per_unit: Option<usize>,
    #[arg(long)]
    shoot_tol: Option<f64>,
    #[arg(long)]
    alpha_tol: Option<f64>,
    #[arg(long)]
    picard_tol: Option<f64>,
    #[arg(long)]
    picard_max_iter: Option<usize>,
    /// Shooting-map monotonicity probes before bisection.
    #[arg(long)]
    alpha_scan: Option<usize>,
    /// Output directory (the PLIOUVILLE_OUT environment variable takes precedence).
    #[arg(long, default_value = DEFAULT_OUT)]
    out: PathBuf,
    /// Worker threads for per-k solves.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Accepted change of u(0) between the last two radii.
    #[arg(long)]
    stabilization_tol: Option<f64>,
    /// Decay exponent for the decay iteration (defaults to the potential's).
    #[arg(long)]
    ell: Option<f64>,
    /// Outer radius of the decay iteration (defaults to k).
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    halvings: Option<usize>,
    /// Optimality tolerance of the direct minimizer.
    #[arg(long)]
    minimize_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolverOverrides {
    pub grid_per_unit: Option<usize>,
    pub shoot_tol: Option<f64>,
    pub alpha_tol: Option<f64>,
    pub picard_tol: Option<f64>,
    pub picard_max_iter: Option<usize>,
    pub alpha_scan: Option<usize>,
}

/// Fully parsed and validated invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub n: u32,
    /// `(coefficient, exponent)` in the order given.
    pub terms: Vec<(f64, f64)>,
    pub potential: String,
    pub k: Option<f64>,
    pub k_list: Option<Vec<f64>>,
    pub solver: SolverOverrides,
    pub out: PathBuf,
    pub jobs: usize,
    pub stabilization_tol: Option<f64>,
    pub ell: Option<f64>,
    pub radius: Option<f64>,
    pub halvings: Option<usize>,
    pub minimize_tol: Option<f64>,
}

fn parse_real(token: &str) -> Result<f64, CliError> {
    let v: f64 = token.trim().parse().map_err(|_| CliError::Grammar {
        token: token.to_string(),
        reason: "expected a real number".into(),
    })?;
    if !v.is_finite() {
        return Err(CliError::Grammar {
            token: token.to_string(),
            reason: "expected a finite number".into(),
        });
    }
    Ok(v)
}

/// `2` or `2+3`: unit-coefficient terms.
pub fn parse_p(spec: &str) -> Result<Vec<(f64, f64)>, CliError> {
    spec.split('+').map(|t| Ok((1.0, parse_real(t)?))).collect()
}

/// `1x2,0.5x3`: coefficient×exponent terms.
pub fn parse_terms(spec: &str) -> Result<Vec<(f64, f64)>, CliError> {
    spec.split(',')
        .map(|t| {
            let (a, p) = t.split_once('x').ok_or_else(|| CliError::Grammar {
                token: t.to_string(),
                reason: "expected <coefficient>x<exponent>".into(),
            })?;
            Ok((parse_real(a)?, parse_real(p)?))
        })
        .collect()
}

pub fn parse_k_list(spec: &str) -> Result<Vec<f64>, CliError> {
    spec.split(',').map(parse_real).collect()
}

fn key_values(body: &str, keys: [&str; 2], kind: &str) -> Result<[f64; 2], CliError> {
    let mut found: [Option<f64>; 2] = [None, None];
    for pair in body.split(',') {
        let (key, value) = pair.split_once('=').ok_or_else(|| CliError::Grammar {
            token: pair.to_string(),
            reason: format!("expected key=value in `{kind}` potential"),
        })?;
        let slot = keys
            .iter()
            .position(|k| *k == key.trim())
            .ok_or_else(|| CliError::Grammar {
                token: key.to_string(),
                reason: format!("`{kind}` potential takes {} and {}", keys[0], keys[1]),
            })?;
        if found[slot].replace(parse_real(value)?).is_some() {
            return Err(CliError::Grammar {
                token: key.to_string(),
                reason: "repeated key".into(),
            });
        }
    }
    match found {
        [Some(a), Some(b)] => Ok([a, b]),
        _ => Err(CliError::Grammar {
            token: body.to_string(),
            reason: format!("`{kind}` potential needs both {} and {}", keys[0], keys[1]),
        }),
    }
}

/// `zero` | `compact:r0=<f>,beta=<f>` | `power:c=<f>,ell=<f>` | `table:<path>`.
pub fn parse_potential(spec: &str) -> Result<Potential, CliError> {
    if spec == "zero" {
        return Ok(Potential::Zero);
    }
    let (head, body) = spec.split_once(':').ok_or_else(|| CliError::Grammar {
        token: spec.to_string(),
        reason: "expected zero, compact:..., power:... or table:...".into(),
    })?;
    match head {
        "compact" => {
            let [r0, beta] = key_values(body, ["r0", "beta"], head)?;
            Ok(Potential::compact_bump(r0, beta)?)
        }
        "power" => {
            let [c, ell] = key_values(body, ["c", "ell"], head)?;
            Ok(Potential::power_decay(c, ell)?)
        }
        "table" if !body.is_empty() => Ok(Potential::Tabulated(
            crate::potential::Table::from_csv_path(body)?,
        )),
        _ => Err(CliError::Grammar {
            token: head.to_string(),
            reason: "unknown potential kind".into(),
        }),
    }
}

fn positive(name: &str, v: Option<f64>) -> Result<(), CliError> {
    match v {
        Some(x) if !(x.is_finite() && x > 0.0) => Err(CliError::Usage(format!(
            "--{name} must be positive, got {x}"
        ))),
        _ => Ok(()),
    }
}

fn fmt_list(values: &[f64], sep: &str) -> String {
    values
        .iter()
        .map(f64::to_string)
        .collect::<Vec<_>>()
        .join(sep)
}

impl RunConfig {
    /// Parses a full argument vector, program name first.
    pub fn parse_from<I, T>(args: I) -> Result<Self, CliError>
    where
        I: IntoIterator<Item = T>,
        T: Into<std::ffi::OsString> + Clone,
    {
        let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
        let (command, a) = match cli.command {
            Command::Construct(a) => (CommandKind::Construct, a),
            Command::Sweep(a) => (CommandKind::Sweep, a),
            Command::Classify(a) => (CommandKind::Classify, a),
            Command::Decay(a) => (CommandKind::Decay, a),
            Command::OracleCheck(a) => (CommandKind::OracleCheck, a),
        };
        let terms = match (&a.p, &a.terms) {
            (Some(p), None) => parse_p(p)?,
            (None, Some(t)) => parse_terms(t)?,
            _ => {
                return Err(CliError::Usage(
                    "exactly one of --p and --terms is required".into(),
                ))
            }
        };
        let cfg = RunConfig {
            command,
            n: a.n,
            terms,
            potential: a.potential,
            k: a.k,
            k_list: a.k_list.as_deref().map(parse_k_list).transpose()?,
            solver: SolverOverrides {
                grid_per_unit: a.grid_per_unit,
                shoot_tol: a.shoot_tol,
                alpha_tol: a.alpha_tol,
                picard_tol: a.picard_tol,
                picard_max_iter: a.picard_max_iter,
                alpha_scan: a.alpha_scan,
            },
            out: a.out,
            jobs: a.jobs,
            stabilization_tol: a.stabilization_tol,
            ell: a.ell,
            radius: a.radius,
            halvings: a.halvings,
            minimize_tol: a.minimize_tol,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks command/flag combinations and numeric preconditions, including
    /// that the problem and solver configuration can be built.
    pub fn validate(&self) -> Result<(), CliError> {
        let name = self.command.name();
        if self.command.takes_k_list() {
            let list = self
                .k_list
                .as_ref()
                .ok_or_else(|| CliError::Usage(format!("{name} needs --k-list")))?;
            if self.k.is_some() {
                return Err(CliError::Usage(format!("{name} takes --k-list, not --k")));
            }
            if list.len() < 3 || list.windows(2).any(|w| w[1] <= w[0]) || list[0] <= 0.0 {
                return Err(CliError::Usage(
                    "--k-list needs at least 3 increasing positive radii".into(),
                ));
            }
        } else {
            if self.k_list.is_some() {
                return Err(CliError::Usage(format!("{name} takes --k, not --k-list")));
            }
            let k = self
                .k
                .ok_or_else(|| CliError::Usage(format!("{name} needs --k")))?;
            positive("k", Some(k))?;
        }
        let only = |flag: &str, set: bool, allowed: bool| {
            if set && !allowed {
                Err(CliError::Usage(format!(
                    "--{flag} does not apply to {name}"
                )))
            } else {
                Ok(())
            }
        };
        only(
            "stabilization-tol",
            self.stabilization_tol.is_some(),
            self.command.takes_k_list(),
        )?;
        let decay = self.command == CommandKind::Decay;
        only("ell", self.ell.is_some(), decay)?;
        only("radius", self.radius.is_some(), decay)?;
        only("halvings", self.halvings.is_some(), decay)?;
        only(
            "minimize-tol",
            self.minimize_tol.is_some(),
            self.command == CommandKind::OracleCheck,
        )?;
        positive("stabilization-tol", self.stabilization_tol)?;
        positive("radius", self.radius)?;
        positive("minimize-tol", self.minimize_tol)?;
        if self.jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        if self.halvings == Some(0) {
            return Err(CliError::Usage("--halvings must be at least 1".into()));
        }
        if let Some(ell) = self.ell {
            if !(ell.is_finite() && ell >= 0.0) {
                return Err(CliError::Usage(format!(
                    "--ell must be nonnegative, got {ell}"
                )));
            }
        }
        self.problem()?;
        self.solver_config().validate()?;
        Ok(())
    }

    pub fn exponents(&self) -> Result<Exponents, CliError> {
        Ok(Exponents::new(self.terms.iter().copied())?)
    }

    pub fn problem(&self) -> Result<Problem, CliError> {
        Ok(Problem::new(
            self.n,
            self.exponents()?,
            parse_potential(&self.potential)?,
        )?)
    }

    pub fn solver_config(&self) -> SolverConfig {
        let d = SolverConfig::default();
        let s = &self.solver;
        SolverConfig {
            grid_per_unit: s.grid_per_unit.unwrap_or(d.grid_per_unit),
            shoot_tol: s.shoot_tol.unwrap_or(d.shoot_tol),
            alpha_tol: s.alpha_tol.unwrap_or(d.alpha_tol),
            picard_tol: s.picard_tol.unwrap_or(d.picard_tol),
            picard_max_iter: s.picard_max_iter.unwrap_or(d.picard_max_iter),
            alpha_scan: s.alpha_scan.unwrap_or(d.alpha_scan),
        }
    }

    /// Argument vector (program name first) that parses back to `self`.
    pub fn to_args(&self) -> Vec<String> {
        let mut args = vec!["pliouville".to_string(), self.command.name().to_string()];
        let mut push = |flag: &str, value: String| {
            args.push(format!("--{flag}"));
            args.push(value);
        };
        push("n", self.n.to_string());
        if self.terms.iter().all(|&(a, _)| a == 1.0) {
            let ps: Vec<f64> = self.terms.iter().map(|t| t.1).collect();
            push("p", fmt_list(&ps, "+"));
        } else {
            let t: Vec<String> = self.terms.iter().map(|(a, p)| format!("{a}x{p}")).collect();
            push("terms", t.join(","));
        }
        push("potential", self.potential.clone());
        if let Some(k) = self.k {
            push("k", k.to_string());
        }
        if let Some(list) = &self.k_list {
            push("k-list", fmt_list(list, ","));
        }
        let s = &self.solver;
        let opt = |v: Option<f64>| v.map(|x| x.to_string());
        let opt_usize = |v: Option<usize>| v.map(|x| x.to_string());
        for (flag, value) in [
            ("grid-per-unit", opt_usize(s.grid_per_unit)),
            ("shoot-tol", opt(s.shoot_tol)),
            ("alpha-tol", opt(s.alpha_tol)),
            ("picard-tol", opt(s.picard_tol)),
            ("picard-max-iter", opt_usize(s.picard_max_iter)),
            ("alpha-scan", opt_usize(s.alpha_scan)),
            ("stabilization-tol", opt(self.stabilization_tol)),
            ("ell", opt(self.ell)),
            ("radius", opt(self.radius)),
            ("halvings", opt_usize(self.halvings)),
            ("minimize-tol", opt(self.minimize_tol)),
        ] {
            if let Some(v) = value {
                push(flag, v);
            }
        }
        push("out", self.out.to_string_lossy().into_owned());
        push("jobs", self.jobs.to_string());
        args
    }

    /// `PLIOUVILLE_OUT` if set and nonempty, else `--out`.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUT_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => self.out.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct ConstructReport<'a> {
    #[serde(flatten)]
    problem: &'a Problem,
    k: f64,
    alpha: f64,
    tail_constant: Option<f64>,
    boundary_residual: f64,
    grid_per_unit: usize,
    iterations: usize,
    energy: f64,
}

#[derive(Debug, Clone, Serialize)]
struct LimitSummary {
    stabilized: bool,
    k: Option<f64>,
    alpha: Option<f64>,
    stabilization_tol: f64,
    trend: AlphaTrend,
}

fn limit_summary(sw: &SweepResult, tol: f64) -> LimitSummary {
    let trend = AlphaTrend::from_alphas(&sw.alphas());
    match extract_limit(sw, tol) {
        LimitOutcome::Stabilized { k, alpha, .. } => LimitSummary {
            stabilized: true,
            k: Some(k),
            alpha: Some(alpha),
            stabilization_tol: tol,
            trend,
        },
        LimitOutcome::NotStabilized { .. } => LimitSummary {
            stabilized: false,
            k: None,
            alpha: None,
            stabilization_tol: tol,
            trend,
        },
    }
}

/// Outcome of a successful run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    /// Printed to stdout by the binary.
    pub summary: Value,
}

fn write_profile(w: &mut ArtifactWriter, res: &ShootingResult) -> Result<(), CliError> {
    w.write_profile(&profile_file_name(res.k), &res.profile, &res.flux)?;
    Ok(())
}

/// Caccioppoli radii `k / 2^j`, `j = 0..=4`, keeping those at least
/// `CACCIOPPOLI_MIN_RADIUS` whose half-ball spans at least two cells. Below
/// that radius the fit is dominated by the support of `b`.
fn caccioppoli_radii(profile: &RadialProfile) -> Vec<f64> {
    let k = profile.grid.radius();
    let h = profile.grid.max_spacing();
    let mut radii: Vec<f64> = (0..=4)
        .map(|j| k / 2f64.powi(j))
        .filter(|&r| r >= CACCIOPPOLI_MIN_RADIUS && 0.5 * r >= 2.0 * h)
        .collect();
    radii.reverse();
    radii
}

/// Largest halving count up to `MAX_AUTO_HALVINGS` that keeps the innermost
/// ball resolved.
fn auto_halvings(profile: &RadialProfile, r: f64) -> Option<usize> {
    let h = profile.grid.max_spacing();
    (1..=MAX_AUTO_HALVINGS)
        .rev()
        .find(|&j| r / 2f64.powi(j as i32 + 1) >= 2.0 * h)
}

fn potential_ell(prob: &Problem) -> Option<f64> {
    match prob.potential {
        Potential::PowerDecay { ell, .. } => Some(ell),
        _ => None,
    }
}

/// Decay-iteration report when `ell < p1`, otherwise a Caccioppoli report.
///
/// The Caccioppoli bound concerns bounded solutions with a finite limit; on a
/// ball solution that is being forced to vanish, the boundary layer at `r = k`
/// dominates `E(r/2)` and the fit measures that layer instead.
fn decay_reports(
    profile: &RadialProfile,
    prob: &Problem,
    ell: Option<f64>,
    radius: Option<f64>,
    halvings: Option<usize>,
) -> Result<Vec<DecayReport>, CliError> {
    let mut reports = Vec::new();
    if let Some(ell) = ell.filter(|&l| l < prob.p()) {
        let r = radius.unwrap_or(profile.grid.radius());
        let halvings = halvings.or_else(|| auto_halvings(profile, r));
        if let Some(h) = halvings {
            reports.push(decay_iteration_verify(profile, prob, ell, r, h)?);
        }
        return Ok(reports);
    }
    let radii = caccioppoli_radii(profile);
    if radii.len() >= 2 {
        reports.push(caccioppoli_verify(profile, prob, &radii)?);
    }
    Ok(reports)
}

/// Runs the configured pipeline and writes its artifacts plus the manifest.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let prob = cfg.problem()?;
    let solver = cfg.solver_config();
    let out_dir = cfg.output_dir();
    let mut w = ArtifactWriter::new(&out_dir)?;
    w.write_json("config.json", cfg)?;

    let summary = match cfg.command {
        CommandKind::Construct => {
            let k = cfg.k.unwrap_or_default();
            let res = solve_bvp(k, &prob, &solver)?;
            write_profile(&mut w, &res)?;
            let report = ConstructReport {
                problem: &prob,
                k,
                alpha: res.alpha,
                tail_constant: res.tail_constant,
                boundary_residual: res.boundary_residual,
                grid_per_unit: solver.grid_per_unit,
                iterations: res.iterations,
                energy: energy_j(&res.profile, &prob, k)?.total,
            };
            w.write_json("result.json", &report)?;
            serde_json::to_value(&report).map_err(IoError::from)?
        }
        CommandKind::Sweep | CommandKind::Classify => {
            let k_list = cfg.k_list.clone().unwrap_or_default();
            let opts = SweepOptions {
                jobs: cfg.jobs,
                ..Default::default()
            };
            let sw = sweep_with(&prob, &k_list, &solver, &opts)?;
            for res in &sw.results {
                write_profile(&mut w, res)?;
            }
            let tol = cfg.stabilization_tol.unwrap_or(DEFAULT_STABILIZATION_TOL);
            let limit = limit_summary(&sw, tol);
            if cfg.command == CommandKind::Sweep {
                let report = json!({ "sweep": &sw, "limit": &limit });
                w.write_json("sweep.json", &report)?;
                json!({ "k_list": &sw.k_list, "alphas": sw.alphas(), "limit": &limit })
            } else {
                let last = sw.results.last().expect("sweep has entries");
                let reports =
                    decay_reports(&last.profile, &prob, potential_ell(&prob), None, None)?;
                let verdict: RegimeVerdict = classify_regime(
                    &prob,
                    &sw,
                    &reports,
                    &Thresholds::with_stabilization_tol(tol),
                );
                let report = json!({ "sweep": &sw, "limit": &limit, "reports": &reports, "verdict": &verdict });
                w.write_json("classify.json", &report)?;
                json!({ "regime": verdict.regime, "alphas": sw.alphas(), "limit": &limit })
            }
        }
        CommandKind::Decay => {
            let k = cfg.k.unwrap_or_default();
            let res = solve_bvp(k, &prob, &solver)?;
            write_profile(&mut w, &res)?;
            let ell = cfg.ell.or_else(|| potential_ell(&prob));
            let reports = decay_reports(&res.profile, &prob, ell, cfg.radius, cfg.halvings)?;
            let report =
                json!({ "problem": &prob, "k": k, "alpha": res.alpha, "reports": &reports });
            w.write_json("decay.json", &report)?;
            if let Some(failed) = reports.iter().find(|r| !r.pass) {
                w.finish()?;
                return Err(CliError::Verification {
                    invariant: serde_json::to_value(failed.kind)
                        .ok()
                        .and_then(|v| v.as_str().map(String::from))
                        .unwrap_or_default(),
                    detail: format!(
                        "fitted slope {:?} against bound exponent {}",
                        failed.fitted_slope, failed.bound_exponent
                    ),
                });
            }
            report
        }
        CommandKind::OracleCheck => {
            let k = cfg.k.unwrap_or_default();
            let shot = solve_bvp(k, &prob, &solver)?;
            write_profile(&mut w, &shot)?;
            let picard = picard_solve(k, &prob, &solver)?;
            let tol = cfg.minimize_tol.unwrap_or(DEFAULT_MINIMIZE_TOL);
            let min = minimize_j_report(k, &prob, &shot.profile.grid, tol)?;
            let dist = |u: &[f64]| {
                shot.profile
                    .u
                    .iter()
                    .zip(u)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            };
            let picard_distance = dist(&picard.profile.u);
            let picard_bound = 5.0 * (solver.shoot_tol + solver.picard_tol);
            let minimizer_distance = dist(&min.profile.u);
            let minimizer_bound = 10.0 * tol;
            let report = json!({
                "problem": &prob,
                "k": k,
                "alpha": shot.alpha,
                "picard": {
                    "iterations": picard.iterations,
                    "distance": picard_distance,
                    "bound": picard_bound,
                    "pass": picard_distance <= picard_bound,
                },
                "minimizer": {
                    "iterations": min.iterations,
                    "residual": min.residual,
                    "smoothing": min.smoothing,
                    "distance": minimizer_distance,
                    "bound": minimizer_bound,
                    "pass": minimizer_distance <= minimizer_bound,
                },
            });
            w.write_json("oracle_check.json", &report)?;
            let failure = if picard_distance > picard_bound {
                Some(("picard_agreement", picard_distance, picard_bound))
            } else if minimizer_distance > minimizer_bound {
                Some(("minimizer_agreement", minimizer_distance, minimizer_bound))
            } else {
                None
            };
            if let Some((invariant, d, b)) = failure {
                w.finish()?;
                return Err(CliError::Verification {
                    invariant: invariant.into(),
                    detail: format!("sup distance {d:e} exceeds {b:e}"),
                });
            }
            report
        }
    };
    w.finish()?;
    Ok(RunOutcome { out_dir, summary })
}

/// Parses `args`, runs, prints, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    match Cli::try_parse_from(&args) {
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return 0;
        }
        _ => {}
    }
    let cfg = match RunConfig::parse_from(&args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{}", e.to_json());
            return e.exit_code();
        }
    };
    match run(&cfg) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
