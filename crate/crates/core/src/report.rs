//! Solver configuration, per-iteration diagnostics and the shared outer loop
//! (stopping rule, divergence guard, timing).

use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{IsvpError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Stop once `d_k ≤ tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Declare divergence once `d_k > divergence_factor · max(d_0, 1)`.
    pub divergence_factor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
            divergence_factor: 1e6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter < 1 || !(self.divergence_factor > 0.0) {
            return Err(IsvpError::InvalidConfig(format!("{self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    /// `‖U_kᵀA(c^k)V_k − Σ*‖_F`.
    pub d_k: f64,
    /// 2-norm condition number of `J_k`.
    pub cond_j: f64,
    /// `‖c^k − c*‖₂` when the generating vector is known.
    pub err_c: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// One record per iterate, starting with `k = 0`.
    pub records: Vec<IterationRecord>,
    pub c_final: Vec<f64>,
    /// Outer iterations performed (the `k` of the last record).
    pub iterations: usize,
    /// Sum of the per-record wall times.
    pub total_ms: f64,
    /// What stopped a diverged run, when it was a numerical error.
    pub failure: Option<String>,
}

impl SolveReport {
    pub fn c_final(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.c_final)
    }

    pub fn final_residual(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.d_k)
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.d_k).collect()
    }
}

pub(crate) fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Anything that carries the current coefficient iterate.
pub(crate) trait Iterate {
    fn coefficients(&self) -> &DVector<f64>;
}

/// Runs `step` from an initialized state until convergence, the iteration
/// cap, or divergence. Step failures end the run as `Diverged`.
pub(crate) fn drive<S: Iterate>(
    config: &SolverConfig,
    truth: Option<&DVector<f64>>,
    initial: (S, IterationRecord),
    mut step: impl FnMut(&S) -> Result<(S, IterationRecord)>,
) -> SolveReport {
    let with_err = |mut rec: IterationRecord, s: &S| {
        rec.err_c = truth.map(|t| (s.coefficients() - t).norm());
        rec
    };
    let (mut state, rec0) = initial;
    let d0 = rec0.d_k;
    let mut records = vec![with_err(rec0, &state)];
    let mut failure = None;
    let bound = config.divergence_factor * d0.max(1.0);

    let status = loop {
        let d = records.last().map(|r| r.d_k).unwrap_or(f64::NAN);
        if !d.is_finite() || d > bound {
            break SolveStatus::Diverged;
        }
        if d <= config.tol {
            break SolveStatus::Converged;
        }
        if records.len() > config.max_iter {
            break SolveStatus::MaxIterations;
        }
        match step(&state) {
            Ok((next, rec)) => {
                records.push(with_err(rec, &next));
                state = next;
            }
            Err(e) => {
                failure = Some(e.to_string());
                break SolveStatus::Diverged;
            }
        }
    };
    let iterations = records.last().map_or(0, |r| r.k);
    SolveReport {
        status,
        total_ms: records.iter().map(|r| r.wall_ms).sum(),
        records,
        c_final: state.coefficients().iter().copied().collect(),
        iterations,
        failure,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Scalar(DVector<f64>);

    impl Iterate for Scalar {
        fn coefficients(&self) -> &DVector<f64> {
            &self.0
        }
    }

    fn rec(k: usize, d: f64) -> IterationRecord {
        IterationRecord {
            k,
            d_k: d,
            cond_j: 1.0,
            err_c: None,
            wall_ms: 1.0,
        }
    }

    fn halving(k: usize, x: f64) -> Result<(Scalar, IterationRecord)> {
        Ok((Scalar(DVector::from_element(1, x / 2.0)), rec(k, x / 2.0)))
    }

    #[test]
    fn stops_when_converged() {
        let cfg = SolverConfig {
            tol: 0.1,
            ..Default::default()
        };
        let mut k = 0;
        let rep = drive(&cfg, None, (Scalar(DVector::from_element(1, 1.0)), rec(0, 1.0)), |s| {
            k += 1;
            halving(k, s.0[0])
        });
        assert_eq!(rep.status, SolveStatus::Converged);
        assert_eq!(rep.iterations, 4);
        assert_eq!(rep.records.len(), 5);
        assert_eq!(rep.total_ms, 5.0);
    }

    #[test]
    fn caps_iterations() {
        let cfg = SolverConfig {
            tol: 1e-300,
            max_iter: 3,
            ..Default::default()
        };
        let mut k = 0;
        let rep = drive(&cfg, None, (Scalar(DVector::from_element(1, 1.0)), rec(0, 1.0)), |s| {
            k += 1;
            halving(k, s.0[0])
        });
        assert_eq!(rep.status, SolveStatus::MaxIterations);
        assert_eq!(rep.iterations, 3);
    }

    #[test]
    fn flags_divergence_and_step_errors() {
        let cfg = SolverConfig::default();
        let truth = DVector::from_element(1, 0.0);
        let rep = drive(&cfg, Some(&truth), (Scalar(DVector::from_element(1, 1.0)), rec(0, 1.0)), |s| {
            Ok((Scalar(s.0.clone() * 1e7), rec(1, 1e7)))
        });
        assert_eq!(rep.status, SolveStatus::Diverged);
        assert_eq!(rep.records[1].err_c, Some(1e7));
        let rep = drive(&cfg, None, (Scalar(DVector::from_element(1, 1.0)), rec(0, 1.0)), |_| {
            Err(IsvpError::NumericalBreakdown("nan".into()))
        });
        assert_eq!(rep.status, SolveStatus::Diverged);
        assert!(rep.failure.unwrap().contains("nan"));
        assert_eq!(rep.records.len(), 1);
    }

    #[test]
    fn converged_at_start() {
        let rep = drive(
            &SolverConfig::default(),
            None,
            (Scalar(DVector::from_element(1, 1.0)), rec(0, 0.0)),
            |_| unreachable!(),
        );
        assert_eq!((rep.status, rep.iterations), (SolveStatus::Converged, 0));
    }
}
