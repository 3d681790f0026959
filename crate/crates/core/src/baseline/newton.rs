//! Newton's method on `f(c) = σ(A(c)) − σ*` with a full SVD per iteration.
//! Slow, but its iterates are exact up to roundoff, which makes it the
//! ground-truth oracle for the other solvers.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::error::{IsvpError, Result};
use crate::instance::IsvpInstance;
use crate::kernels::{approx_jacobian, residual_d};
use crate::linalg::{cond2, lu_solve, vec_finite};
use crate::report::{drive, elapsed_ms, Iterate, IterationRecord, SolveReport, SolverConfig};
use crate::svd::full_svd;

struct NewtonState {
    k: usize,
    c: DVector<f64>,
    jac: DMatrix<f64>,
    f: DVector<f64>,
}

impl Iterate for NewtonState {
    fn coefficients(&self) -> &DVector<f64> {
        &self.c
    }
}

/// Exact SVD, Jacobian and residual at `c`; singular values are matched to
/// targets by sorted position.
fn linearize(instance: &IsvpInstance, k: usize, c: DVector<f64>, start: Instant) -> Result<(NewtonState, IterationRecord)> {
    let a = instance.evaluate_a(&c)?;
    let svd = full_svd(&a)?;
    let n = instance.n();
    for i in 0..n {
        let next = if i + 1 < n { svd.sigma[i + 1] } else { 0.0 };
        if svd.sigma[i] - next <= instance.min_gap() {
            return Err(IsvpError::SingularValueCollision(i, i + 1));
        }
    }
    let jac = approx_jacobian(&svd.u, &svd.v, instance)?;
    let f = &svd.sigma - instance.sigma_star();
    let d = residual_d(&svd.u, &svd.v, &a, instance.sigma_star())?;
    let cond_j = cond2(&jac);
    let rec = IterationRecord {
        k,
        d_k: d,
        cond_j,
        err_c: None,
        wall_ms: elapsed_ms(start),
    };
    Ok((NewtonState { k, c, jac, f }, rec))
}

fn newton_step(state: &NewtonState, instance: &IsvpInstance) -> Result<(NewtonState, IterationRecord)> {
    let start = Instant::now();
    let rhs = DMatrix::from_column_slice(state.f.len(), 1, (-&state.f).as_slice());
    let delta = lu_solve(&state.jac, &rhs).map_err(|e| match e {
        IsvpError::SingularSystem => IsvpError::SingularJacobian,
        other => other,
    })?;
    let c_next = &state.c + delta.column(0);
    if !vec_finite(&c_next) {
        return Err(IsvpError::NumericalBreakdown("non-finite Newton step".into()));
    }
    linearize(instance, state.k + 1, c_next, start)
}

pub fn newton_exact_solve(instance: &IsvpInstance, c0: &DVector<f64>, config: &SolverConfig) -> Result<SolveReport> {
    newton_exact_solve_tracked(instance, c0, config, None)
}

pub fn newton_exact_solve_tracked(
    instance: &IsvpInstance,
    c0: &DVector<f64>,
    config: &SolverConfig,
    truth: Option<&DVector<f64>>,
) -> Result<SolveReport> {
    config.validate()?;
    let initial = linearize(instance, 0, c0.clone(), Instant::now())?;
    Ok(drive(config, truth, initial, |s| newton_step(s, instance)))
}
