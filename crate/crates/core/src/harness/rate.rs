//! Empirical convergence order from a residual history.
//!
//! For residuals `d_k → 0` of order `p`, `log d_{k+1} / log d_k → p`. Only
//! residuals strictly between a roundoff floor and 1 carry information: above
//! 1 the logarithm changes sign, and at the floor the residual measures
//! rounding rather than convergence.

use crate::error::{IsvpError, Result};

/// Number of trailing ratios averaged by [`estimate_root_rate`].
pub const RATE_WINDOW: usize = 2;

/// `100·ε·scale`.
pub fn roundoff_floor(scale: f64) -> f64 {
    100.0 * f64::EPSILON * scale
}

fn informative(d: f64, floor: f64) -> bool {
    d < 1.0 && d > floor && d.is_finite()
}

/// `log d_{k+1} / log d_k` for every consecutive pair where both residuals
/// lie strictly between `floor` and 1.
pub fn log_ratios(d: &[f64], floor: f64) -> Vec<f64> {
    d.windows(2)
        .filter(|w| informative(w[0], floor) && informative(w[1], floor))
        .map(|w| w[1].ln() / w[0].ln())
        .collect()
}

/// Mean of the last [`RATE_WINDOW`] log-ratios. Needs at least three
/// informative residuals.
pub fn estimate_root_rate(d: &[f64], floor: f64) -> Result<f64> {
    let usable = d.iter().filter(|&&x| informative(x, floor)).count();
    let ratios = log_ratios(d, floor);
    if usable < 3 || ratios.len() < 2 {
        return Err(IsvpError::InsufficientData(usable));
    }
    let tail = &ratios[ratios.len().saturating_sub(RATE_WINDOW)..];
    Ok(tail.iter().sum::<f64>() / tail.len() as f64)
}
