use serde::{Deserialize, Serialize};

use crate::error::{GsmError, Result};
use crate::numerics::normal_sf;

/// Maximum-likelihood log-normal fit (divisor `n` for the variance).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalFit {
    pub mu_hat: f64,
    pub sigma_hat: f64,
}

pub fn lognormal_fit(values: &[f64]) -> Result<LogNormalFit> {
    if values.len() < 2 {
        return Err(GsmError::Degenerate("log-normal fit needs at least two values".into()));
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(GsmError::Degenerate(format!("log-normal fit needs positive data, got {v}")));
    }
    let n = values.len() as f64;
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let mu_hat = logs.iter().sum::<f64>() / n;
    let sigma_hat = (logs.iter().map(|l| (l - mu_hat) * (l - mu_hat)).sum::<f64>() / n).sqrt();
    if !(sigma_hat > 0.0) {
        return Err(GsmError::Degenerate("all observations are equal".into()));
    }
    Ok(LogNormalFit { mu_hat, sigma_hat })
}

/// `1 - Φ((ln k - μ̂) / σ̂)`; 1 for `k <= 0`.
pub fn lognormal_tail(fit: &LogNormalFit, k: f64) -> f64 {
    if k <= 0.0 {
        return 1.0;
    }
    normal_sf((k.ln() - fit.mu_hat) / fit.sigma_hat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{sample_normal, RngStream};

    #[test]
    fn median_threshold_gives_half() {
        let e2 = 1f64.exp().powi(2);
        let fit = lognormal_fit(&[1.0, e2]).unwrap();
        assert!((fit.mu_hat - 1.0).abs() < 1e-15);
        assert!((fit.sigma_hat - 1.0).abs() < 1e-15);
        assert!((lognormal_tail(&fit, 1f64.exp()) - 0.5).abs() < 1e-15);
        assert_eq!(lognormal_tail(&fit, 0.0), 1.0);
        assert!(lognormal_tail(&fit, 1e-300) > 1.0 - 1e-12);
    }

    #[test]
    fn degenerate_data_rejected() {
        assert!(lognormal_fit(&[2.0, 2.0, 2.0]).is_err());
        assert!(lognormal_fit(&[2.0]).is_err());
        assert!(lognormal_fit(&[2.0, -1.0]).is_err());
    }

    #[test]
    fn upper_five_percent_point() {
        let mut rng = RngStream::new(44, 0);
        let y: Vec<f64> = (0..100).map(|_| sample_normal(&mut rng).exp()).collect();
        let fit = lognormal_fit(&y).unwrap();
        let t = lognormal_tail(&fit, 1.6449f64.exp());
        // sampling noise of (μ̂, σ̂) at n = 100
        assert!((t - 0.05).abs() < 0.03, "{t}");
    }

    #[test]
    fn scaling_invariance() {
        let y = [0.3, 1.7, 2.2, 9.0, 41.0];
        let c = 250.0;
        let scaled: Vec<f64> = y.iter().map(|v| v * c).collect();
        let a = lognormal_fit(&y).unwrap();
        let b = lognormal_fit(&scaled).unwrap();
        for k in [0.5, 3.0, 20.0] {
            assert!((lognormal_tail(&a, k) - lognormal_tail(&b, c * k)).abs() < 1e-13);
        }
    }
}
