//! Seeded sweeps over one problem size and one solver.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::generate::{build_b0, generate_instance, perturb_c_star};
use super::rate::{estimate_root_rate, roundoff_floor};
use crate::baseline::{alg1_solve_tracked, newton_exact_solve_tracked};
use crate::cayley_free::{solve_tracked, SecondStageProjection};
use crate::error::{IsvpError, Result};
use crate::kernels::approx_jacobian;
use crate::report::{elapsed_ms, SolveReport, SolveStatus, SolverConfig};
use crate::svd::full_svd;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    CayleyFree,
    Alg1,
    NewtonOracle,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::CayleyFree => "cayley-free",
            Algorithm::Alg1 => "alg1",
            Algorithm::NewtonOracle => "newton",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Algorithm {
    type Err = IsvpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cayley-free" => Ok(Algorithm::CayleyFree),
            "alg1" => Ok(Algorithm::Alg1),
            "newton" => Ok(Algorithm::NewtonOracle),
            other => Err(IsvpError::InvalidConfig(format!("unknown algorithm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub m: usize,
    pub n: usize,
    /// Relative radius of the perturbation of `c*`.
    pub beta: f64,
    /// Target `‖I − B_0J_0‖₂` (Cayley-free solver only).
    pub mu: f64,
    pub seeds: Vec<u64>,
    pub algorithm: Algorithm,
    pub tol: f64,
    pub max_iter: usize,
}

impl ExperimentConfig {
    pub fn new(m: usize, n: usize, beta: f64, mu: f64, seeds: Vec<u64>, algorithm: Algorithm) -> Self {
        let defaults = SolverConfig::default();
        Self {
            m,
            n,
            beta,
            mu,
            seeds,
            algorithm,
            tol: defaults.tol,
            max_iter: defaults.max_iter,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m < self.n {
            return Err(IsvpError::InvalidConfig(format!("need m >= n >= 1, got {}x{}", self.m, self.n)));
        }
        if !(self.beta >= 0.0) || !(0.0..1.0).contains(&self.mu) {
            return Err(IsvpError::InvalidConfig(format!(
                "need beta >= 0 and 0 <= mu < 1, got beta = {}, mu = {}",
                self.beta, self.mu
            )));
        }
        self.solver_config().validate()
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            ..SolverConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub seed: u64,
    pub algorithm: Algorithm,
    pub status: SolveStatus,
    pub iterations: usize,
    pub total_ms: f64,
    /// Measured `‖I − B_0J_0‖₂` for the Cayley-free solver.
    pub achieved_mu: Option<f64>,
    pub root_rate: Option<f64>,
    pub final_d: Option<f64>,
    pub final_err_c: Option<f64>,
    /// Setup or solver error that ended the trial.
    pub error: Option<String>,
    pub report: Option<SolveReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub trials: usize,
    pub converged: usize,
    pub convergence_fraction: f64,
    pub mean_iterations: Option<f64>,
    pub median_iterations: Option<f64>,
    pub mean_wall_ms: Option<f64>,
    pub mean_root_rate: Option<f64>,
}

impl Aggregates {
    pub fn from_trials(trials: &[TrialResult]) -> Self {
        let iters: Vec<f64> = trials.iter().map(|t| t.iterations as f64).collect();
        let walls: Vec<f64> = trials.iter().map(|t| t.total_ms).collect();
        let rates: Vec<f64> = trials.iter().filter_map(|t| t.root_rate).collect();
        let converged = trials.iter().filter(|t| t.status == SolveStatus::Converged).count();
        Self {
            trials: trials.len(),
            converged,
            convergence_fraction: if trials.is_empty() {
                0.0
            } else {
                converged as f64 / trials.len() as f64
            },
            mean_iterations: mean(&iters),
            median_iterations: median(&iters),
            mean_wall_ms: mean(&walls),
            mean_root_rate: mean(&rates),
        }
    }
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 0 { (v[mid - 1] + v[mid]) / 2.0 } else { v[mid] })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentBundle {
    pub config: ExperimentConfig,
    pub trials: Vec<TrialResult>,
    pub aggregates: Aggregates,
}

/// One seed: generate, perturb, initialize and solve.
///
/// For the Cayley-free solver the time spent building `B_0` is added to the
/// `k = 0` record, so every solver's timing covers its own initialization.
pub fn run_trial(config: &ExperimentConfig, seed: u64) -> TrialResult {
    let mut achieved_mu = None;
    let mut floor = roundoff_floor(1.0);
    let outcome: Result<SolveReport> = (|| {
        let (instance, c_star) = generate_instance(config.m, config.n, seed)?;
        floor = roundoff_floor(instance.sigma_star().norm());
        let c0 = perturb_c_star(&c_star, config.beta, seed);
        let solver = config.solver_config();
        match config.algorithm {
            Algorithm::CayleyFree => {
                let a0 = instance.evaluate_a(&c0)?;
                let svd = full_svd(&a0)?;
                let j0 = approx_jacobian(&svd.u, &svd.v, &instance)?;
                let start = Instant::now();
                let (b0, mu) = build_b0(&j0, config.mu, seed)?;
                let b0_ms = elapsed_ms(start);
                achieved_mu = Some(mu);
                let mut report = solve_tracked(
                    &instance,
                    &c0,
                    &b0,
                    &solver,
                    SecondStageProjection::Refined,
                    Some(&c_star),
                )?;
                report.records[0].wall_ms += b0_ms;
                report.total_ms = report.records.iter().map(|r| r.wall_ms).sum();
                Ok(report)
            }
            Algorithm::Alg1 => alg1_solve_tracked(&instance, &c0, &solver, Some(&c_star)),
            Algorithm::NewtonOracle => newton_exact_solve_tracked(&instance, &c0, &solver, Some(&c_star)),
        }
    })();

    match outcome {
        Ok(report) => TrialResult {
            seed,
            algorithm: config.algorithm,
            status: report.status,
            iterations: report.iterations,
            total_ms: report.total_ms,
            achieved_mu,
            root_rate: estimate_root_rate(&report.residuals(), floor).ok(),
            final_d: Some(report.final_residual()),
            final_err_c: report.records.last().and_then(|r| r.err_c),
            error: report.failure.clone(),
            report: Some(report),
        },
        Err(e) => TrialResult {
            seed,
            algorithm: config.algorithm,
            status: SolveStatus::Diverged,
            iterations: 0,
            total_ms: 0.0,
            achieved_mu,
            root_rate: None,
            final_d: None,
            final_err_c: None,
            error: Some(e.to_string()),
            report: None,
        },
    }
}

/// Runs every seed in order. Per-seed failures are recorded, never fatal.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentBundle> {
    config.validate()?;
    let trials: Vec<TrialResult> = config.seeds.iter().map(|&s| run_trial(config, s)).collect();
    Ok(ExperimentBundle {
        config: config.clone(),
        aggregates: Aggregates::from_trials(&trials),
        trials,
    })
}
