//! Comparison estimators for `P(Y > k)` and the scoring metrics used to rank
//! them against the empirical exceedance proportion.

mod lognormal;
mod normal_mixture;

pub use lognormal::{lognormal_fit, lognormal_tail, LogNormalFit};
pub use normal_mixture::{
    normal_mixture_fit, normal_mixture_tail, NormalMixtureFit, DEFAULT_K_MAX, DEFAULT_RESTARTS,
};

use crate::error::{domain, Result};

/// Empirical exceedance proportion `#{i : y_i > k} / n` (strict inequality).
pub fn edf_tail(values: &[f64], k: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(domain("edf_tail", "no observations"));
    }
    let above = values.iter().filter(|&&v| v > k).count();
    Ok(above as f64 / values.len() as f64)
}

/// Percent reduction in MSE relative to the EDF: `(mse_edf - mse_hat) / mse_edf × 100`.
/// Positive when the estimator beats the EDF.
pub fn relative_mse(mse_edf: f64, mse_hat: f64) -> Result<f64> {
    if !(mse_edf > 0.0) {
        return Err(domain("relative_mse", format!("EDF mse must be positive, got {mse_edf}")));
    }
    Ok((mse_edf - mse_hat) / mse_edf * 100.0)
}

/// Percent bias of the mean estimate: `(mean(estimates) - p_true) / p_true × 100`.
pub fn relative_bias(estimates: &[f64], p_true: f64) -> Result<f64> {
    if !(p_true > 0.0) {
        return Err(domain("relative_bias", format!("p_true must be positive, got {p_true}")));
    }
    if estimates.is_empty() {
        return Err(domain("relative_bias", "no estimates"));
    }
    let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
    Ok((mean - p_true) / p_true * 100.0)
}
