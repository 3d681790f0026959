//! Randomized invariant checks behind `isvp verify`.
//!
//! Each check draws a seeded synthetic fixture, measures one error quantity
//! and compares it with a fixed tolerance. [`run_verification`] repeats every
//! check over a range of sizes and reports the worst case per check.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::generate::generate_instance;
use crate::baseline::{alg1_skew_pair, cayley_orthogonalize};
use crate::cayley_free::{chebyshev_update, correction_matrices};
use crate::error::Result;
use crate::kernels::{approx_jacobian, IndexRegion};
use crate::linalg::{diag_embed, frobenius, lu_inverse, orthogonality_defect};
use crate::svd::full_svd;

/// Central-difference step for the Jacobian check.
pub const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Check {
    Symmetrization,
    CorrectionSystem,
    ChebyshevCubing,
    SkewPair,
    CayleyOrthogonality,
    JacobianFiniteDifference,
}

impl Check {
    pub const ALL: [Check; 6] = [
        Check::Symmetrization,
        Check::CorrectionSystem,
        Check::ChebyshevCubing,
        Check::SkewPair,
        Check::CayleyOrthogonality,
        Check::JacobianFiniteDifference,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Check::Symmetrization => "correction symmetrization",
            Check::CorrectionSystem => "correction linear system on I1 and I2",
            Check::ChebyshevCubing => "chebyshev cubing identity",
            Check::SkewPair => "skew pair exact skewness",
            Check::CayleyOrthogonality => "cayley orthogonality",
            Check::JacobianFiniteDifference => "jacobian vs finite differences",
        }
    }
}

/// One measured error against its tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub error: f64,
    pub tolerance: f64,
}

impl Measurement {
    pub fn passed(&self) -> bool {
        self.error <= self.tolerance
    }
}

/// Worst case of one check over all fixtures.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckSummary {
    pub check: Check,
    pub trials: usize,
    pub failures: usize,
    /// Largest `error / tolerance` seen.
    pub worst_ratio: f64,
}

impl CheckSummary {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.trials > 0
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Orthogonal-ish factor `I + εN`, the regime the solvers operate in.
fn near_orthogonal(rng: &mut ChaCha8Rng, side: usize, eps: f64) -> DMatrix<f64> {
    DMatrix::identity(side, side) + uniform(rng, side, side) * eps
}

/// Strictly decreasing positive targets with gaps of at least 0.1.
fn spread_sigma(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    let mut s = Vec::with_capacity(n);
    let mut acc = 0.5;
    for _ in 0..n {
        acc += 0.1 + rng.random::<f64>();
        s.push(acc);
    }
    s.reverse();
    DVector::from_vec(s)
}

fn skew(rng: &mut ChaCha8Rng, side: usize) -> DMatrix<f64> {
    let g = uniform(rng, side, side);
    &g - g.transpose()
}

fn gram_defect(q: &DMatrix<f64>) -> DMatrix<f64> {
    let side = q.ncols();
    q.transpose() * q - DMatrix::identity(side, side)
}

/// `L + Lᵀ = UᵀU − I` and `R + Rᵀ = VᵀV − I`, tolerance `1e-12·m`.
pub fn check_symmetrization(m: usize, n: usize, seed: u64) -> Result<Measurement> {
    let mut r = rng(seed);
    let u = near_orthogonal(&mut r, m, 0.1);
    let v = near_orthogonal(&mut r, n, 0.1);
    let sigma = spread_sigma(&mut r, n);
    let w = diag_embed(m, n, sigma.as_slice()) + uniform(&mut r, m, n) * 0.1;
    let pair = correction_matrices(&u, &v, &w, &sigma)?;
    let el = frobenius(&(&pair.left + pair.left.transpose() - gram_defect(&u)));
    let er = frobenius(&(&pair.right + pair.right.transpose() - gram_defect(&v)));
    Ok(Measurement {
        error: el.max(er),
        tolerance: 1e-12 * m as f64,
    })
}

/// `W_ij = [Σ* + Σ*R + LᵀΣ*]_ij` on the off-diagonal `I_1` and `I_2`
/// entries, relative to `‖W‖_F`, tolerance `1e-10`.
pub fn check_correction_system(m: usize, n: usize, seed: u64) -> Result<Measurement> {
    let mut r = rng(seed);
    let u = near_orthogonal(&mut r, m, 0.1);
    let v = near_orthogonal(&mut r, n, 0.1);
    let sigma = spread_sigma(&mut r, n);
    let w = diag_embed(m, n, sigma.as_slice()) + uniform(&mut r, m, n) * 0.1;
    let pair = correction_matrices(&u, &v, &w, &sigma)?;
    let s_mat = diag_embed(m, n, sigma.as_slice());
    let model = &s_mat + &s_mat * &pair.right + pair.left.transpose() * &s_mat;
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..m {
            if matches!(IndexRegion::classify(i, j, n), IndexRegion::I1 | IndexRegion::I2) {
                worst = worst.max((w[(i, j)] - model[(i, j)]).abs());
            }
        }
    }
    Ok(Measurement {
        error: worst / frobenius(&w),
        tolerance: 1e-10,
    })
}

/// `I − B'J = (I − BJ)³`, tolerance `1e-12·(1 + ‖I − BJ‖_F³)`.
pub fn check_chebyshev(n: usize, seed: u64) -> Result<Measurement> {
    let mut r = rng(seed);
    let scale = 0.5 / (n as f64).sqrt();
    let j = DMatrix::identity(n, n) + uniform(&mut r, n, n) * scale;
    let b = lu_inverse(&j)? * (DMatrix::identity(n, n) + uniform(&mut r, n, n) * scale);
    let id = DMatrix::<f64>::identity(n, n);
    let e = &id - &b * &j;
    let next = chebyshev_update(&b, &j);
    let err = frobenius(&(&id - &next * &j - &e * &e * &e));
    Ok(Measurement {
        error: err,
        tolerance: 1e-12 * (1.0 + frobenius(&e).powi(3)),
    })
}

/// `X + Xᵀ = 0` and `Y + Yᵀ = 0` exactly.
pub fn check_skew_pair(m: usize, n: usize, seed: u64) -> Result<Measurement> {
    let mut r = rng(seed);
    let s = spread_sigma(&mut r, n);
    let d = uniform(&mut r, m, n);
    let (x, y) = alg1_skew_pair(&d, &s, 1e-10)?;
    let err = frobenius(&(&x + x.transpose())).max(frobenius(&(&y + y.transpose())));
    Ok(Measurement { error: err, tolerance: 0.0 })
}

/// Cayley update of an orthogonal matrix stays orthogonal, tolerance
/// `1e-10·side`.
pub fn check_cayley(side: usize, seed: u64) -> Result<Measurement> {
    let mut r = rng(seed);
    let q = full_svd(&uniform(&mut r, side, side))?.u;
    let s = skew(&mut r, side);
    let next = cayley_orthogonalize(&q, &s)?;
    Ok(Measurement {
        error: orthogonality_defect(&next),
        tolerance: 1e-10 * side as f64,
    })
}

/// At an exact SVD point the Jacobian entry `u_iᵀA_jv_i` is `∂σ_i/∂c_j`;
/// compare with central differences, relative in Frobenius norm, tolerance
/// `1e-4`.
pub fn check_jacobian_fd(m: usize, n: usize, seed: u64) -> Result<Measurement> {
    let (instance, c) = generate_instance(m, n, seed)?;
    let svd = full_svd(&instance.evaluate_a(&c)?)?;
    let jac = approx_jacobian(&svd.u, &svd.v, &instance)?;
    let mut fd = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut plus = c.clone();
        plus[j] += FD_STEP;
        let mut minus = c.clone();
        minus[j] -= FD_STEP;
        let sp = full_svd(&instance.evaluate_a(&plus)?)?.sigma;
        let sm = full_svd(&instance.evaluate_a(&minus)?)?.sigma;
        fd.set_column(j, &((sp - sm) / (2.0 * FD_STEP)));
    }
    Ok(Measurement {
        error: frobenius(&(&jac - &fd)) / frobenius(&jac),
        tolerance: 1e-4,
    })
}

/// Measures `check` on the fixture `(m, n, seed)`. Square-only checks use `n`.
pub fn measure(check: Check, m: usize, n: usize, seed: u64) -> Result<Measurement> {
    match check {
        Check::Symmetrization => check_symmetrization(m, n, seed),
        Check::CorrectionSystem => check_correction_system(m, n, seed),
        Check::ChebyshevCubing => check_chebyshev(n, seed),
        Check::SkewPair => check_skew_pair(m, n, seed),
        Check::CayleyOrthogonality => check_cayley(m.max(n), seed),
        Check::JacobianFiniteDifference => check_jacobian_fd(m, n, seed),
    }
}

/// Fixture sizes for trial `t`: `n` in `1..=max_n`, `m` in `n..=max_m`.
pub fn fixture_size(t: u64, max_m: usize, max_n: usize) -> (usize, usize) {
    let mut r = ChaCha8Rng::seed_from_u64(t);
    r.set_stream(7);
    let n = r.random_range(1..=max_n);
    let m = r.random_range(n..=max_m.max(n));
    (m, n)
}

/// Runs every check over `trials` seeded fixtures up to `max_m × max_n`.
/// An error from a check counts as a failure.
pub fn run_verification(trials: u64, max_m: usize, max_n: usize) -> Vec<CheckSummary> {
    Check::ALL
        .iter()
        .map(|&check| {
            let mut summary = CheckSummary {
                check,
                trials: 0,
                failures: 0,
                worst_ratio: 0.0,
            };
            for t in 0..trials {
                let (m, n) = fixture_size(t, max_m, max_n);
                summary.trials += 1;
                match measure(check, m, n, t) {
                    Ok(meas) => {
                        let ratio = if meas.tolerance > 0.0 {
                            meas.error / meas.tolerance
                        } else if meas.error == 0.0 {
                            0.0
                        } else {
                            f64::INFINITY
                        };
                        summary.worst_ratio = summary.worst_ratio.max(ratio);
                        if !meas.passed() {
                            summary.failures += 1;
                        }
                    }
                    Err(_) => {
                        summary.failures += 1;
                        summary.worst_ratio = f64::INFINITY;
                    }
                }
            }
            summary
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sweep_passes() {
        for s in run_verification(6, 12, 6) {
            assert!(s.passed(), "{s:?}");
        }
    }

    #[test]
    fn sizes_respect_bounds() {
        for t in 0..50 {
            let (m, n) = fixture_size(t, 50, 30);
            assert!(1 <= n && n <= 30 && n <= m && m <= 50);
        }
    }
}
