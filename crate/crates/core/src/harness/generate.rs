//! Random instances, perturbed starting points and initial inverse-Jacobian
//! approximations.
//!
//! All randomness comes from ChaCha8 seeded with `seed_from_u64(seed)`; each
//! use draws from its own stream of that generator, so changing one draw
//! sequence never shifts another. Instance draws are uniform on `[0, 1)` in
//! this order: `A_0` row-major, then `A_1 … A_n` row-major, then `c*`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{IsvpError, Result};
use crate::instance::IsvpInstance;
use crate::linalg::{lu_inverse, spectral_norm};
use crate::svd::full_svd;

pub const GENERATOR_STREAM: u64 = 0;
pub const PERTURB_STREAM: u64 = 1;
pub const B0_STREAM: u64 = 2;

const MAX_DRAWS: usize = 8;
const RESEED_STEP: u64 = 0x9E37_79B9_7F4A_7C15;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DMatrix<f64> {
    let data: Vec<f64> = (0..m * n).map(|_| rng.random::<f64>()).collect();
    DMatrix::from_row_slice(m, n, &data)
}

/// Targets are the singular values of `A(c*)`, so a solution is known.
fn instance_from(basis: Vec<DMatrix<f64>>, c_star: &DVector<f64>) -> Result<IsvpInstance> {
    let mut a = basis[0].clone();
    for (i, ai) in basis.iter().enumerate().skip(1) {
        a += ai * c_star[i - 1];
    }
    let sigma = full_svd(&a)?.sigma;
    IsvpInstance::new(&basis, sigma.as_slice())
}

fn retry_draws(
    seed: u64,
    mut draw: impl FnMut(&mut ChaCha8Rng) -> (Vec<DMatrix<f64>>, DVector<f64>),
) -> Result<(IsvpInstance, DVector<f64>)> {
    for attempt in 0..MAX_DRAWS {
        let mut rng = rng_for(seed.wrapping_add(RESEED_STEP.wrapping_mul(attempt as u64)), GENERATOR_STREAM);
        let (basis, c_star) = draw(&mut rng);
        match instance_from(basis, &c_star) {
            Ok(inst) => return Ok((inst, c_star)),
            Err(IsvpError::DuplicateSigma { .. } | IsvpError::NonpositiveSigma { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(IsvpError::DegenerateDraw(MAX_DRAWS))
}

/// Random dense instance with a known solution `c*`.
pub fn generate_instance(m: usize, n: usize, seed: u64) -> Result<(IsvpInstance, DVector<f64>)> {
    if n == 0 || m < n {
        return Err(IsvpError::DimensionMismatch(format!("need m >= n >= 1, got {m}x{n}")));
    }
    retry_draws(seed, |rng| {
        let basis: Vec<DMatrix<f64>> = (0..=n).map(|_| draw_matrix(rng, m, n)).collect();
        let c_star = DVector::from_fn(n, |_, _| rng.random::<f64>());
        (basis, c_star)
    })
}

/// Structured family: `A_0 = 0`, `A_k = [T_k; 0]` where `T_1 = I` and `T_k`
/// has ones on the `(k−1)`-th sub- and super-diagonals. Only `c*` is random.
pub fn toeplitz_instance(m: usize, n: usize, seed: u64) -> Result<(IsvpInstance, DVector<f64>)> {
    if n == 0 || m < n {
        return Err(IsvpError::DimensionMismatch(format!("need m >= n >= 1, got {m}x{n}")));
    }
    let mut basis = vec![DMatrix::zeros(m, n)];
    for k in 0..n {
        basis.push(DMatrix::from_fn(m, n, |i, j| {
            if i < n && i.abs_diff(j) == k {
                1.0
            } else {
                0.0
            }
        }));
    }
    retry_draws(seed, |rng| (basis.clone(), DVector::from_fn(n, |_, _| rng.random::<f64>())))
}

/// `c0_i = c*_i + δ_i`, `δ_i` uniform on `[−β·max|c*|, β·max|c*|]`.
pub fn perturb_c_star(c_star: &DVector<f64>, beta: f64, seed: u64) -> DVector<f64> {
    let radius = c_star.amax() * beta;
    if !(radius > 0.0) {
        return c_star.clone();
    }
    let mut rng = rng_for(seed, PERTURB_STREAM);
    c_star.map(|c| c + rng.random_range(-radius..=radius))
}

/// Initial inverse approximation with `‖I − B_0J_0‖₂ = μ`.
///
/// `μ = 0` gives the LU inverse. Otherwise `B_0 = (I + P)J_0^{-1}` for a
/// seeded random `P` rescaled to spectral norm `μ`, so `I − B_0J_0 = −P`.
/// Returns `B_0` and the measured `‖I − B_0J_0‖₂`.
pub fn build_b0(j0: &DMatrix<f64>, mu: f64, seed: u64) -> Result<(DMatrix<f64>, f64)> {
    if !(0.0..1.0).contains(&mu) {
        return Err(IsvpError::InvalidConfig(format!("mu must lie in [0, 1), got {mu}")));
    }
    let n = j0.nrows();
    let inv = lu_inverse(j0).map_err(|_| IsvpError::SingularJacobian)?;
    let id = DMatrix::<f64>::identity(n, n);
    let b0 = if mu == 0.0 {
        inv
    } else {
        let mut rng = rng_for(seed, B0_STREAM);
        let p = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let p = &p * (mu / spectral_norm(&p));
        (&id + p) * inv
    };
    let achieved = spectral_norm(&(&id - &b0 * j0));
    Ok((b0, achieved))
}
