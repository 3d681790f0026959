//! Full singular value decomposition with a deterministic sign convention and
//! a deterministic completion of the left singular basis.

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{IsvpError, Result};

const SVD_MAX_SWEEPS: usize = 10_000;

/// `A = U·diag(σ)·Vᵀ` with `U` square `m×m`, `V` square `n×n` and `σ`
/// non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactorization {
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub sigma: DVector<f64>,
}

/// Full SVD of an `m×n` matrix with `m ≥ n`.
///
/// For each `i ≤ n` the largest-magnitude entry of `v_i` (lowest row on ties)
/// is made positive and `u_i` is flipped with it. Columns `u_{n+1}…u_m` are
/// built from coordinate vectors, always taking the one with the largest
/// component outside the current span (lowest index on ties).
pub fn full_svd(a: &DMatrix<f64>) -> Result<SvdFactorization> {
    let (m, n) = a.shape();
    if m < n || n == 0 {
        return Err(IsvpError::DimensionMismatch(format!(
            "full_svd needs m >= n >= 1, got {m}x{n}"
        )));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(IsvpError::NonFiniteInput("matrix passed to full_svd".into()));
    }
    let svd = SVD::try_new(a.clone(), true, true, f64::EPSILON, SVD_MAX_SWEEPS)
        .ok_or_else(|| IsvpError::NumericalFailure("SVD iteration did not converge".into()))?;
    let (thin_u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(IsvpError::NumericalFailure("SVD returned no vectors".into())),
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]).then(i.cmp(&j)));

    let mut u = DMatrix::zeros(m, m);
    let mut v = DMatrix::zeros(n, n);
    let mut sigma = DVector::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        sigma[dst] = svd.singular_values[src].max(0.0);
        let vcol = v_t.row(src).transpose();
        let mut pivot = 0;
        for r in 1..n {
            if vcol[r].abs() > vcol[pivot].abs() {
                pivot = r;
            }
        }
        let sign = if vcol[pivot] < 0.0 { -1.0 } else { 1.0 };
        v.column_mut(dst).copy_from(&(vcol * sign));
        u.column_mut(dst).copy_from(&(thin_u.column(src) * sign));
    }
    complete_orthonormal_basis(&mut u, n);
    Ok(SvdFactorization { u, v, sigma })
}

/// Fills columns `filled..m` of `q` (whose first `filled` columns are
/// orthonormal) with an orthonormal completion built from coordinate vectors.
pub(crate) fn complete_orthonormal_basis(q: &mut DMatrix<f64>, filled: usize) {
    let m = q.nrows();
    // ‖Qᵀe_r‖² for every row r, i.e. how much of e_r is already spanned.
    let mut spanned: Vec<f64> = (0..m)
        .map(|r| (0..filled).map(|c| q[(r, c)] * q[(r, c)]).sum())
        .collect();
    let mut used = vec![false; m];
    for k in filled..m {
        let mut best = None;
        for r in 0..m {
            if used[r] {
                continue;
            }
            match best {
                Some(b) if spanned[r] >= spanned[b] => {}
                _ => best = Some(r),
            }
        }
        let r = best.expect("fewer coordinate vectors than missing columns");
        used[r] = true;
        let mut w = DVector::zeros(m);
        w[r] = 1.0;
        // Two passes of classical Gram-Schmidt.
        for _ in 0..2 {
            let basis = q.columns(0, k);
            let coeffs = basis.tr_mul(&w);
            w -= basis * coeffs;
        }
        let norm = w.norm();
        w /= norm;
        for i in 0..m {
            spanned[i] += w[i] * w[i];
        }
        q.column_mut(k).copy_from(&w);
    }
}
