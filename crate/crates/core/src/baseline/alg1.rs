//! Two-step Ulm-Chebyshev-like method with Cayley-transform updates of the
//! singular vector estimates.
//!
//! Each outer iteration solves four Cayley systems, two of side `m` and two of
//! side `n`, each with as many right-hand sides as its side: `2(m+n)` in all.
//! Unlike the Cayley-free solver, the offset here is the plain projection
//! `b_i = u_iᵀA_0v_i`; the targets enter through the `− σ*` in the updates.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::error::{IsvpError, Result};
use crate::instance::IsvpInstance;
use crate::kernels::jacobian_with_offset;
use crate::linalg::{all_finite, at_b, cond2, lu_inverse, lu_solve, vec_finite};
use crate::report::{drive, elapsed_ms, Iterate, IterationRecord, SolveReport, SolverConfig};
use crate::svd::full_svd;

#[derive(Debug, Clone, PartialEq)]
pub struct Alg1State {
    pub k: usize,
    pub c: DVector<f64>,
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub b_inv: DMatrix<f64>,
    pub jac: DMatrix<f64>,
    /// Uncorrected offset `u_iᵀA_0v_i`.
    pub offset: DVector<f64>,
    /// Shifted targets used in the skew-matrix denominators.
    pub shift: DVector<f64>,
}

impl Iterate for Alg1State {
    fn coefficients(&self) -> &DVector<f64> {
        &self.c
    }
}

fn check_shift(s: &DVector<f64>, min_gap: f64) -> Result<()> {
    let n = s.len();
    for j in 0..n {
        if !s[j].is_finite() || s[j].abs() <= min_gap {
            return Err(IsvpError::DegenerateShift(format!("|s_{j}| = {} too small", s[j].abs())));
        }
        for i in 0..j {
            if (s[i] - s[j]).abs() <= min_gap || (s[i] + s[j]).abs() <= min_gap {
                return Err(IsvpError::DegenerateShift(format!(
                    "s_{i} = {} and s_{j} = {} nearly coincide",
                    s[i], s[j]
                )));
            }
        }
    }
    Ok(())
}

/// Skew-symmetric `(X, Y)` from the projection `D` and the shifts `s`.
///
/// Entries are computed once for `i < j` (or `i ≥ n > j` in the lower block)
/// and written in mirrored pairs, so `X = −Xᵀ` and `Y = −Yᵀ` bitwise.
pub fn alg1_skew_pair(d: &DMatrix<f64>, s: &DVector<f64>, min_gap: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (m, n) = d.shape();
    if s.len() != n || m < n {
        return Err(IsvpError::DimensionMismatch(format!(
            "D is {m}x{n} with {} shifts",
            s.len()
        )));
    }
    check_shift(s, min_gap)?;
    let mut x = DMatrix::zeros(m, m);
    let mut y = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..j {
            let denom = s[j] * s[j] - s[i] * s[i];
            let xij = (s[i] * d[(j, i)] + s[j] * d[(i, j)]) / denom;
            x[(i, j)] = xij;
            x[(j, i)] = -xij;
            let yij = (s[i] * d[(i, j)] + s[j] * d[(j, i)]) / denom;
            y[(i, j)] = yij;
            y[(j, i)] = -yij;
        }
        for i in n..m {
            let xij = d[(i, j)] / s[j];
            x[(i, j)] = xij;
            x[(j, i)] = -xij;
        }
    }
    Ok((x, y))
}

/// Cayley update: solves `(I + S/2)·Q'ᵀ = (I − S/2)·Qᵀ` and returns `Q'`.
pub fn cayley_orthogonalize(q: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let side = s.nrows();
    if !s.is_square() || q.ncols() != side {
        return Err(IsvpError::DimensionMismatch(format!(
            "Q is {:?}, S is {:?}",
            q.shape(),
            s.shape()
        )));
    }
    let id = DMatrix::<f64>::identity(side, side);
    let half = s * 0.5;
    let lhs = &id + &half;
    let rhs = (&id - &half) * q.transpose();
    Ok(lu_solve(&lhs, &rhs)?.transpose())
}

pub fn alg1_initial_state(instance: &IsvpInstance, c0: &DVector<f64>) -> Result<(Alg1State, IterationRecord)> {
    let start = Instant::now();
    let a0 = instance.evaluate_a(c0)?;
    let svd = full_svd(&a0)?;
    let (jac, offset) = jacobian_with_offset(&svd.u, &svd.v, instance)?;
    let b_inv = lu_inverse(&jac).map_err(|_| IsvpError::SingularJacobian)?;
    let proj = at_b(&svd.u, &(&a0 * &svd.v));
    let d = diag_residual(&proj, instance.sigma_star());
    let cond_j = cond2(&jac);
    let state = Alg1State {
        k: 0,
        c: c0.clone(),
        u: svd.u,
        v: svd.v,
        b_inv,
        jac,
        offset,
        shift: instance.sigma_star().clone(),
    };
    let rec = IterationRecord {
        k: 0,
        d_k: d,
        cond_j,
        err_c: None,
        wall_ms: elapsed_ms(start),
    };
    Ok((state, rec))
}

/// `‖P − Σ*‖_F` for a projection `P = UᵀA V`.
fn diag_residual(proj: &DMatrix<f64>, sigma: &DVector<f64>) -> f64 {
    let mut r = proj.clone();
    for i in 0..sigma.len() {
        r[(i, i)] -= sigma[i];
    }
    r.norm()
}

fn breakdown(what: &str, ok: bool) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(IsvpError::NumericalBreakdown(format!("non-finite {what}")))
    }
}

pub fn alg1_outer_step(state: &Alg1State, instance: &IsvpInstance) -> Result<(Alg1State, IterationRecord)> {
    let start = Instant::now();
    let sigma = instance.sigma_star();
    let n = instance.n();
    let b = &state.b_inv;
    let gap = instance.min_gap();

    let y = &state.c - b * (&state.jac * &state.c + &state.offset - sigma);
    breakdown("first correction", vec_finite(&y))?;
    let a_y = instance.evaluate_a(&y)?;
    let d_y = at_b(&state.u, &(&a_y * &state.v));
    let (x, yskew) = alg1_skew_pair(&d_y, &state.shift, gap)?;
    let z = cayley_orthogonalize(&state.u, &x)?;
    let nmat = cayley_orthogonalize(&state.v, &yskew)?;

    let p = at_b(&z, &(&a_y * &nmat));
    let sigma_bar = DVector::from_fn(n, |i, _| p[(i, i)]);
    let excess = &sigma_bar - sigma;
    let c_next = &y - b * &excess;
    breakdown("second correction", vec_finite(&c_next))?;
    let id = DMatrix::<f64>::identity(n, n);
    let shift_bar = sigma + (&id - &state.jac * b) * &excess;

    let a_next = instance.evaluate_a(&c_next)?;
    let d_bar = at_b(&state.u, &(&a_next * &state.v)) - &d_y + &p;
    let (x_bar, y_bar) = alg1_skew_pair(&d_bar, &shift_bar, gap)?;
    let u_next = cayley_orthogonalize(&z, &x_bar)?;
    let v_next = cayley_orthogonalize(&nmat, &y_bar)?;
    breakdown("updated vectors", all_finite(&u_next) && all_finite(&v_next))?;

    let proj = at_b(&u_next, &(&a_next * &v_next));
    let sigma_next = DVector::from_fn(n, |i, _| proj[(i, i)]);
    let (jac, offset) = jacobian_with_offset(&u_next, &v_next, instance)?;
    let b_next = crate::cayley_free::chebyshev_update(b, &jac);
    breakdown("Chebyshev update", all_finite(&b_next))?;
    let shift = sigma + (&id - &jac * &b_next) * (&sigma_next - sigma);

    let d = diag_residual(&proj, sigma);
    let cond_j = cond2(&jac);
    let k = state.k + 1;
    let next = Alg1State {
        k,
        c: c_next,
        u: u_next,
        v: v_next,
        b_inv: b_next,
        jac,
        offset,
        shift,
    };
    let rec = IterationRecord {
        k,
        d_k: d,
        cond_j,
        err_c: None,
        wall_ms: elapsed_ms(start),
    };
    Ok((next, rec))
}

/// Solves from `c0`, starting with the exact inverse of the initial Jacobian.
pub fn alg1_solve(instance: &IsvpInstance, c0: &DVector<f64>, config: &SolverConfig) -> Result<SolveReport> {
    alg1_solve_tracked(instance, c0, config, None)
}

pub fn alg1_solve_tracked(
    instance: &IsvpInstance,
    c0: &DVector<f64>,
    config: &SolverConfig,
    truth: Option<&DVector<f64>>,
) -> Result<SolveReport> {
    config.validate()?;
    let initial = alg1_initial_state(instance, c0)?;
    Ok(drive(config, truth, initial, |s| alg1_outer_step(s, instance)))
}
