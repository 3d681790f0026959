//! Small dense helpers on top of nalgebra.
//!
//! Every dense linear solve in the crate goes through [`lu_solve`] or
//! [`lu_inverse`], which count the right-hand sides they process on a
//! per-thread counter. The solver tests use the counter to check how many
//! systems an outer iteration actually solves.

use std::cell::Cell;

use nalgebra::{DMatrix, DVector};

use crate::error::{IsvpError, Result};

thread_local! {
    static SOLVED_RHS: Cell<usize> = const { Cell::new(0) };
}

/// Number of right-hand sides solved by dense LU on this thread since the
/// last [`reset_solve_counter`].
pub fn solved_rhs_count() -> usize {
    SOLVED_RHS.with(Cell::get)
}

pub fn reset_solve_counter() {
    SOLVED_RHS.with(|c| c.set(0));
}

fn count_rhs(k: usize) {
    SOLVED_RHS.with(|c| c.set(c.get() + k));
}

/// `aᵀ·b`, routed through the blocked GEMM kernel.
pub fn at_b(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.transpose() * b
}

pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

pub fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|x| x.is_finite())
}

pub fn vec_finite(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// `‖QᵀQ − I‖_F`.
pub fn orthogonality_defect(q: &DMatrix<f64>) -> f64 {
    let mut g = at_b(q, q);
    for i in 0..g.ncols() {
        g[(i, i)] -= 1.0;
    }
    g.norm()
}

/// Solves `a·x = rhs` by LU with partial pivoting.
pub fn lu_solve(a: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !a.is_square() || a.nrows() != rhs.nrows() {
        return Err(IsvpError::DimensionMismatch(format!(
            "system {}x{} with right-hand side {}x{}",
            a.nrows(),
            a.ncols(),
            rhs.nrows(),
            rhs.ncols()
        )));
    }
    count_rhs(rhs.ncols());
    let lu = a.clone().lu();
    let x = lu.solve(rhs).ok_or(IsvpError::SingularSystem)?;
    if !all_finite(&x) {
        return Err(IsvpError::SingularSystem);
    }
    Ok(x)
}

/// Dense inverse through LU; counted as `n` right-hand sides.
pub fn lu_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    lu_solve(a, &DMatrix::identity(n, n))
}

/// Singular values in non-increasing order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// 2-norm condition number; infinite for a singular (or empty) matrix.
pub fn cond2(m: &DMatrix<f64>) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// `m×n` matrix with `diag` on its leading diagonal.
pub fn diag_embed(m: usize, n: usize, diag: &[f64]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m, n);
    for (i, &d) in diag.iter().enumerate().take(m.min(n)) {
        out[(i, i)] = d;
    }
    out
}
