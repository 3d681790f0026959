//! Kernels shared by every solver: the approximate Jacobian, the generalized
//! residual vectors and the residual norm `d`.

use nalgebra::{DMatrix, DVector};

use crate::error::{IsvpError, Result};
use crate::instance::IsvpInstance;
use crate::linalg::all_finite;

/// Region of an index pair `(i, j)` of an `m×m` correction matrix, 0-based,
/// where the first `n` indices belong to the singular triplets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IndexRegion {
    Diagonal,
    /// `i ≠ j`, both `< n`.
    I1,
    /// `i ≥ n`, `j < n`.
    I2,
    /// `i < n`, `j ≥ n`.
    I3,
    /// `i ≠ j`, both `≥ n`.
    I4,
}

impl IndexRegion {
    pub fn classify(i: usize, j: usize, n: usize) -> Self {
        match (i == j, i < n, j < n) {
            (true, _, _) => IndexRegion::Diagonal,
            (false, true, true) => IndexRegion::I1,
            (false, false, true) => IndexRegion::I2,
            (false, true, false) => IndexRegion::I3,
            (false, false, false) => IndexRegion::I4,
        }
    }
}

fn check_vectors(u: &DMatrix<f64>, v: &DMatrix<f64>, m: usize, n: usize) -> Result<()> {
    if u.shape() != (m, m) || v.shape() != (n, n) {
        return Err(IsvpError::DimensionMismatch(format!(
            "U is {:?}, V is {:?}, expected ({m}, {m}) and ({n}, {n})",
            u.shape(),
            v.shape()
        )));
    }
    if !all_finite(u) || !all_finite(v) {
        return Err(IsvpError::NonFiniteInput("singular vector estimates".into()));
    }
    Ok(())
}

/// `(J, a)` with `[J]_{ij} = u_iᵀ A_j v_i` and `a_i = u_iᵀ A_0 v_i`, from a
/// single product of the stacked basis with the `vec(u_i v_iᵀ)` columns.
pub fn jacobian_with_offset(
    u: &DMatrix<f64>,
    v: &DMatrix<f64>,
    instance: &IsvpInstance,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let (m, n) = (instance.m(), instance.n());
    check_vectors(u, v, m, n)?;
    let mut outer = DMatrix::zeros(m * n, n);
    for i in 0..n {
        let ui = u.column(i);
        let vi = v.column(i);
        let mut col = outer.column_mut(i);
        for q in 0..n {
            let vq = vi[q];
            for p in 0..m {
                col[q * m + p] = ui[p] * vq;
            }
        }
    }
    let g = outer.transpose() * instance.stacked_basis();
    let offset = g.column(0).clone_owned();
    let jac = g.columns(1, n).clone_owned();
    Ok((jac, offset))
}

/// The approximate Jacobian `[J]_{ij} = u_iᵀ A_j v_i`.
pub fn approx_jacobian(u: &DMatrix<f64>, v: &DMatrix<f64>, instance: &IsvpInstance) -> Result<DMatrix<f64>> {
    Ok(jacobian_with_offset(u, v, instance)?.0)
}

/// `g_i = u_iᵀ M v_i − σ*_i (u_iᵀu_i + v_iᵀv_i)/2` for `i = 1..n`.
///
/// With `M = A_0` this is the corrected offset `b`; with `M = A(c)` it is
/// `J·c + b`.
pub fn generalized_residual_vector(
    u: &DMatrix<f64>,
    v: &DMatrix<f64>,
    mat: &DMatrix<f64>,
    sigma_star: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = sigma_star.len();
    let m = mat.nrows();
    if mat.ncols() != n {
        return Err(IsvpError::DimensionMismatch(format!(
            "M is {m}x{}, expected {n} columns",
            mat.ncols()
        )));
    }
    check_vectors(u, v, m, n)?;
    if !all_finite(mat) {
        return Err(IsvpError::NonFiniteInput("matrix M".into()));
    }
    let mv = mat * v;
    Ok(DVector::from_fn(n, |i, _| {
        let ui = u.column(i);
        let vi = v.column(i);
        ui.dot(&mv.column(i)) - sigma_star[i] * (ui.dot(&ui) + vi.dot(&vi)) / 2.0
    }))
}

/// `d = ‖Uᵀ A(c) V − Σ*‖_F`.
pub fn residual_d(
    u: &DMatrix<f64>,
    v: &DMatrix<f64>,
    a_of_c: &DMatrix<f64>,
    sigma_star: &DVector<f64>,
) -> Result<f64> {
    let (m, n) = a_of_c.shape();
    if sigma_star.len() != n {
        return Err(IsvpError::DimensionMismatch("target length differs from column count".into()));
    }
    check_vectors(u, v, m, n)?;
    let mut w = u.transpose() * (a_of_c * v);
    for i in 0..n {
        w[(i, i)] -= sigma_star[i];
    }
    Ok(w.norm())
}
