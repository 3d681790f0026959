//! The Cayley-free two-step solver.
//!
//! Each outer iteration makes two coefficient corrections that share one
//! approximate Jacobian inverse `B_k`. After each correction the singular
//! vector estimates are refined multiplicatively by `I − C`, where `C` is a
//! correction matrix computed entrywise from Gram matrices and a projected
//! `W = UᵀA(c)V`. No linear system is solved and no matrix is inverted here;
//! `B_k` is maintained by the Chebyshev recurrence
//! `B' = B + B(2I − J'B)(I − J'B)`, which cubes the residual `I − BJ'`.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{IsvpError, Result};
use crate::instance::IsvpInstance;
use crate::kernels::{approx_jacobian, generalized_residual_vector, residual_d, IndexRegion};
use crate::linalg::{all_finite, at_b, cond2, vec_finite};
use crate::report::{drive, elapsed_ms, Iterate, IterationRecord, SolveReport};
use crate::svd::full_svd;

pub use crate::report::SolverConfig;

/// Which projected matrix feeds the second-stage `I_2` block of `Ē` and the
/// `I_1` block of `F̄`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SecondStageProjection {
    /// `W̄ = ŪᵀA(c^{k+1})V̄` everywhere, mirroring the first stage.
    #[default]
    Refined,
    /// The first-stage `W = UᵀA(c̄)V` in those two blocks, as the formulas
    /// are sometimes stated. Kept for comparison only: with it `d_k` stalls
    /// because the refined vectors no longer match `c^{k+1}`.
    FirstStage,
}

/// Complete state of one outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub k: usize,
    pub c: DVector<f64>,
    /// Approximate left singular vectors, `m×m`.
    pub u: DMatrix<f64>,
    /// Approximate right singular vectors, `n×n`.
    pub v: DMatrix<f64>,
    /// Approximate inverse of the Jacobian.
    pub b_inv: DMatrix<f64>,
    /// Approximate Jacobian `[J]_{ij} = u_iᵀA_jv_i`.
    pub jac: DMatrix<f64>,
    /// Corrected offset, so that `J·c + b` is the residual vector at `c`.
    pub offset: DVector<f64>,
}

impl Iterate for SolverState {
    fn coefficients(&self) -> &DVector<f64> {
        &self.c
    }
}

/// The pair of non-skew correction matrices `(X̄, Ȳ)` (or `(Ē, F̄)`).
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionPair {
    /// `m×m`, acting on the left vectors.
    pub left: DMatrix<f64>,
    /// `n×n`, acting on the right vectors.
    pub right: DMatrix<f64>,
}

/// `QᵀQ`, computed once and mirrored so it is exactly symmetric.
fn symmetric_gram(q: &DMatrix<f64>) -> DMatrix<f64> {
    let mut g = at_b(q, q);
    let s = g.nrows();
    for j in 0..s {
        for i in (j + 1)..s {
            g[(j, i)] = g[(i, j)];
        }
    }
    g
}

/// Builds the correction pair from the current estimates `U`, `V` and the
/// projection `W = UᵀA(c)V`.
///
/// The pair solves, to first order, `UᵀU = I + L + Lᵀ`, `VᵀV = I + R + Rᵀ`
/// and `[W]_{ij} = [Σ* + Σ*R + LᵀΣ*]_{ij}` on `I_1 ∪ I_2`. The `I_4` block
/// is fixed symmetric.
pub fn correction_matrices(
    u: &DMatrix<f64>,
    v: &DMatrix<f64>,
    w: &DMatrix<f64>,
    sigma_star: &DVector<f64>,
) -> Result<CorrectionPair> {
    correction_matrices_split(u, v, w, w, sigma_star)
}

/// As [`correction_matrices`], but the `I_2` block of `left` and the whole
/// off-diagonal of `right` read `w_alt` instead of `w`.
fn correction_matrices_split(
    u: &DMatrix<f64>,
    v: &DMatrix<f64>,
    w: &DMatrix<f64>,
    w_alt: &DMatrix<f64>,
    sigma_star: &DVector<f64>,
) -> Result<CorrectionPair> {
    let n = sigma_star.len();
    let m = u.nrows();
    if u.shape() != (m, m) || v.shape() != (n, n) || w.shape() != (m, n) || w_alt.shape() != (m, n) {
        return Err(IsvpError::DimensionMismatch(format!(
            "U {:?}, V {:?}, W {:?} for n = {n}",
            u.shape(),
            v.shape(),
            w.shape()
        )));
    }
    if !all_finite(u) || !all_finite(v) || !all_finite(w) || !all_finite(w_alt) || !vec_finite(sigma_star) {
        return Err(IsvpError::NonFiniteInput("correction inputs".into()));
    }
    let gu = symmetric_gram(u);
    let gv = symmetric_gram(v);
    let s = sigma_star;

    let mut left = DMatrix::zeros(m, m);
    for j in 0..m {
        for i in 0..m {
            left[(i, j)] = match IndexRegion::classify(i, j, n) {
                IndexRegion::Diagonal => (gu[(i, i)] - 1.0) / 2.0,
                IndexRegion::I1 => {
                    (s[i] * w[(j, i)] + s[j] * w[(i, j)] - s[j] * s[j] * gu[(i, j)] - s[i] * s[j] * gv[(i, j)])
                        / (s[i] * s[i] - s[j] * s[j])
                }
                IndexRegion::I2 => gu[(i, j)] - w_alt[(i, j)] / s[j],
                IndexRegion::I3 => w[(j, i)] / s[i],
                IndexRegion::I4 => gu[(i, j)] / 2.0,
            };
        }
    }

    let mut right = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            right[(i, j)] = if i == j {
                (gv[(i, i)] - 1.0) / 2.0
            } else {
                (s[i] * w_alt[(i, j)] + s[j] * w_alt[(j, i)] - s[i] * s[j] * gu[(i, j)] - s[j] * s[j] * gv[(j, i)])
                    / (s[i] * s[i] - s[j] * s[j])
            };
        }
    }
    Ok(CorrectionPair { left, right })
}

/// `M(I − C) = M − M·C`, the first-order stand-in for `M(I + C)^{-1}`.
pub fn multiplicative_refine(mat: &DMatrix<f64>, corr: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(corr.nrows(), corr.ncols(), "correction matrix must be square");
    assert_eq!(mat.ncols(), corr.nrows(), "correction side must match column count");
    mat - mat * corr
}

/// `B' = B + B(2I − J'B)(I − J'B)`, so that `I − B'J' = (I − BJ')³`.
pub fn chebyshev_update(b: &DMatrix<f64>, j_next: &DMatrix<f64>) -> DMatrix<f64> {
    let n = b.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let jb = j_next * b;
    let resid = &id - &jb;
    let two_minus = &id * 2.0 - &jb;
    b + b * (two_minus * resid)
}

/// `UᵀA V` as `Uᵀ·(A·V)`.
fn project(u: &DMatrix<f64>, a: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
    at_b(u, &(a * v))
}

fn ensure_finite(what: &str, ok: bool) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(IsvpError::NumericalBreakdown(format!("non-finite {what}")))
    }
}

/// Initial state from an exact SVD of `A(c0)`, plus its `k = 0` record.
pub fn initial_state(
    instance: &IsvpInstance,
    c0: &DVector<f64>,
    b0: &DMatrix<f64>,
) -> Result<(SolverState, IterationRecord)> {
    let start = Instant::now();
    let n = instance.n();
    if b0.shape() != (n, n) {
        return Err(IsvpError::DimensionMismatch(format!("B0 is {:?}, expected ({n}, {n})", b0.shape())));
    }
    if !all_finite(b0) {
        return Err(IsvpError::NonFiniteInput("B0".into()));
    }
    let a0 = instance.evaluate_a(c0)?;
    let svd = full_svd(&a0)?;
    let jac = approx_jacobian(&svd.u, &svd.v, instance)?;
    let a_base = instance.basis(0).clone_owned();
    let offset = generalized_residual_vector(&svd.u, &svd.v, &a_base, instance.sigma_star())?;
    let d = residual_d(&svd.u, &svd.v, &a0, instance.sigma_star())?;
    let cond_j = cond2(&jac);
    let state = SolverState {
        k: 0,
        c: c0.clone(),
        u: svd.u,
        v: svd.v,
        b_inv: b0.clone(),
        jac,
        offset,
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

/// One outer iteration with the default second-stage projection.
pub fn outer_step(state: &SolverState, instance: &IsvpInstance) -> Result<(SolverState, IterationRecord)> {
    outer_step_with(state, instance, SecondStageProjection::Refined)
}

pub fn outer_step_with(
    state: &SolverState,
    instance: &IsvpInstance,
    projection: SecondStageProjection,
) -> Result<(SolverState, IterationRecord)> {
    let start = Instant::now();
    let sigma = instance.sigma_star();
    let b = &state.b_inv;

    // First correction.
    let c_bar = &state.c - b * (&state.jac * &state.c + &state.offset);
    ensure_finite("first correction", vec_finite(&c_bar))?;
    let a_bar = instance.evaluate_a(&c_bar)?;
    let w = project(&state.u, &a_bar, &state.v);
    let first = correction_matrices(&state.u, &state.v, &w, sigma)?;
    let u_bar = multiplicative_refine(&state.u, &first.left);
    let v_bar = multiplicative_refine(&state.v, &first.right);
    ensure_finite("refined vectors", all_finite(&u_bar) && all_finite(&v_bar))?;

    // Second correction with the same B.
    let rho = generalized_residual_vector(&u_bar, &v_bar, &a_bar, sigma)?;
    let c_next = &c_bar - b * rho;
    ensure_finite("second correction", vec_finite(&c_next))?;
    let a_next = instance.evaluate_a(&c_next)?;
    let w_bar = project(&u_bar, &a_next, &v_bar);
    let second = match projection {
        SecondStageProjection::Refined => correction_matrices(&u_bar, &v_bar, &w_bar, sigma)?,
        SecondStageProjection::FirstStage => correction_matrices_split(&u_bar, &v_bar, &w_bar, &w, sigma)?,
    };
    let u_next = multiplicative_refine(&u_bar, &second.left);
    let v_next = multiplicative_refine(&v_bar, &second.right);
    ensure_finite("updated vectors", all_finite(&u_next) && all_finite(&v_next))?;

    let jac = approx_jacobian(&u_next, &v_next, instance)?;
    let a_base = instance.basis(0).clone_owned();
    let offset = generalized_residual_vector(&u_next, &v_next, &a_base, sigma)?;
    let b_next = chebyshev_update(b, &jac);
    ensure_finite("Chebyshev update", all_finite(&b_next))?;

    let d = residual_d(&u_next, &v_next, &a_next, sigma)?;
    let cond_j = cond2(&jac);
    let k = state.k + 1;
    let next = SolverState {
        k,
        c: c_next,
        u: u_next,
        v: v_next,
        b_inv: b_next,
        jac,
        offset,
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

/// Solves from `c0` with the given initial inverse-Jacobian approximation.
pub fn solve(
    instance: &IsvpInstance,
    c0: &DVector<f64>,
    b0: &DMatrix<f64>,
    config: &SolverConfig,
) -> Result<SolveReport> {
    solve_tracked(instance, c0, b0, config, SecondStageProjection::Refined, None)
}

/// [`solve`] with a choice of second-stage projection and, when the
/// generating vector is known, per-iterate errors `‖c^k − c*‖`.
pub fn solve_tracked(
    instance: &IsvpInstance,
    c0: &DVector<f64>,
    b0: &DMatrix<f64>,
    config: &SolverConfig,
    projection: SecondStageProjection,
    truth: Option<&DVector<f64>>,
) -> Result<SolveReport> {
    config.validate()?;
    let initial = initial_state(instance, c0, b0)?;
    Ok(drive(config, truth, initial, |s| outer_step_with(s, instance, projection)))
}
