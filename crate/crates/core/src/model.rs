//! The gamma shape mixture `f(y | π, θ) = Σ_j π_j Ga(y | j, θ)`, j = 1..J.
//!
//! Component `j` has shape `j` and the shared rate `θ`, so component means
//! `j/θ` and variances `j/θ²` are strictly increasing in `j`. The ordering is
//! structural, which is why no identifiability constraint is needed.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, GsmError, Result};
use crate::numerics::{log_sum_exp, reg_gamma_cdf, reg_gamma_sf, sample_gamma, sample_uniform_open};
use crate::observations::Observations;

const SIMPLEX_TOL: f64 = 1e-10;

/// Mixture weights over shapes `1..=J` and a common rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct GsmParams {
    weights: Vec<f64>,
    theta: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    weights: Vec<f64>,
    theta: f64,
}

impl TryFrom<RawParams> for GsmParams {
    type Error = GsmError;

    fn try_from(raw: RawParams) -> Result<Self> {
        GsmParams::new(raw.weights, raw.theta)
    }
}

impl GsmParams {
    pub fn new(weights: Vec<f64>, theta: f64) -> Result<Self> {
        check_simplex("GsmParams::new", &weights)?;
        if !(theta.is_finite() && theta > 0.0) {
            return Err(domain("GsmParams::new", format!("theta must be positive, got {theta}")));
        }
        Ok(GsmParams { weights, theta })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Number of components `J`.
    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    /// `(mean, variance)` of each component, `(j/θ, j/θ²)`.
    pub fn component_moments(&self) -> Vec<(f64, f64)> {
        (1..=self.weights.len())
            .map(|j| (j as f64 / self.theta, j as f64 / (self.theta * self.theta)))
            .collect()
    }

    /// `ln f(y)`.
    pub fn log_density(&self, y: f64) -> Result<f64> {
        if !(y.is_finite() && y > 0.0) {
            return Err(domain("density", format!("y must be positive, got {y}")));
        }
        let ln_theta = self.theta.ln();
        let ln_y = y.ln();
        let mut ln_fact = 0.0; // ln Γ(j) = ln (j-1)!
        let mut terms = Vec::with_capacity(self.weights.len());
        for (idx, &w) in self.weights.iter().enumerate() {
            let j = (idx + 1) as f64;
            if idx > 0 {
                ln_fact += (idx as f64).ln();
            }
            if w > 0.0 {
                terms.push(w.ln() + j * ln_theta + (j - 1.0) * ln_y - self.theta * y - ln_fact);
            }
        }
        match log_sum_exp(&terms) {
            Ok(v) => Ok(v),
            // every component underflowed at this y
            Err(_) => Ok(f64::NEG_INFINITY),
        }
    }

    pub fn density(&self, y: f64) -> Result<f64> {
        Ok(self.log_density(y)?.exp())
    }

    pub fn cdf(&self, y: f64) -> Result<f64> {
        if y == 0.0 {
            return Ok(0.0);
        }
        self.mix(y, reg_gamma_cdf)
    }

    /// `P(Y > k) = Σ_j π_j (1 - F_j(k | θ))`; exactly 1 at `k = 0`.
    pub fn tail_prob(&self, k: f64) -> Result<f64> {
        if k == 0.0 {
            return Ok(1.0);
        }
        self.mix(k, reg_gamma_sf)
    }

    fn mix(&self, y: f64, f: fn(f64, f64, f64) -> Result<f64>) -> Result<f64> {
        if y.is_nan() || y < 0.0 {
            return Err(domain("cdf", format!("y must be nonnegative, got {y}")));
        }
        let mut total = 0.0;
        for (idx, &w) in self.weights.iter().enumerate() {
            if w > 0.0 {
                total += w * f((idx + 1) as f64, self.theta, y)?;
            }
        }
        Ok(total.clamp(0.0, 1.0))
    }

    /// `E[Y^m] = Σ_j π_j (j)(j+1)...(j+m-1) / θ^m`.
    pub fn moment(&self, m: u32) -> Result<f64> {
        if m == 0 {
            return Err(domain("moment", "order must be at least 1"));
        }
        if m <= 4 {
            let total: f64 = self
                .weights
                .iter()
                .enumerate()
                .map(|(idx, &w)| {
                    let j = (idx + 1) as f64;
                    w * (0..m).map(|l| j + l as f64).product::<f64>()
                })
                .sum();
            return Ok(total / self.theta.powi(m as i32));
        }
        let ln_theta_m = m as f64 * self.theta.ln();
        let terms: Vec<f64> = self
            .weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(idx, &w)| {
                let j = (idx + 1) as f64;
                w.ln() + (0..m).map(|l| (j + l as f64).ln()).sum::<f64>() - ln_theta_m
            })
            .collect();
        Ok(log_sum_exp(&terms)?.exp())
    }

    pub fn mean(&self) -> f64 {
        self.weighted_shape() / self.theta
    }

    pub fn variance(&self) -> f64 {
        let m1 = self.mean();
        let second: f64 = self
            .weights
            .iter()
            .enumerate()
            .map(|(idx, &w)| {
                let j = (idx + 1) as f64;
                w * j * (j + 1.0)
            })
            .sum::<f64>()
            / (self.theta * self.theta);
        second - m1 * m1
    }

    /// `Σ_j π_j j`.
    pub fn weighted_shape(&self) -> f64 {
        weighted_shape(&self.weights)
    }

    /// `p`-quantile by bisection on the CDF.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(domain("quantile", format!("p must lie in (0, 1), got {p}")));
        }
        let mut lo = 0.0;
        let mut hi = self.mean().max(1.0 / self.theta);
        while self.cdf(hi)? < p {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid)? < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `n` iid draws: a label from `π`, then `Ga(label, θ)`.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Observations> {
        if n == 0 {
            return Err(domain("sample", "n must be at least 1"));
        }
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            let shape = self.sample_label(rng) as f64;
            let mut y = sample_gamma(shape, self.theta, rng)?;
            // Ga(1, θ) draws below the smallest positive double round to zero
            while y <= 0.0 {
                y = sample_gamma(shape, self.theta, rng)?;
            }
            values.push(y);
        }
        Observations::new(values)
    }

    /// A 1-based component label drawn from the weights.
    fn sample_label<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = sample_uniform_open(rng);
        let mut acc = 0.0;
        let mut last = 1;
        for (idx, &w) in self.weights.iter().enumerate() {
            if w > 0.0 {
                acc += w;
                last = idx + 1;
                if u < acc {
                    return idx + 1;
                }
            }
        }
        last
    }
}

pub(crate) fn weighted_shape(weights: &[f64]) -> f64 {
    weights
        .iter()
        .enumerate()
        .map(|(idx, &w)| w * (idx + 1) as f64)
        .sum()
}

pub(crate) fn check_simplex(func: &'static str, weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(domain(func, "weights must be nonempty"));
    }
    if let Some(&bad) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(domain(func, format!("weights must be nonnegative, got {bad}")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > SIMPLEX_TOL {
        return Err(domain(func, format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

/// `θ = (Σ_j π_j j) / μ`: the rate that gives mixture mean `mu`.
pub fn theta_from_mean(weights: &[f64], mu: f64) -> Result<f64> {
    check_simplex("theta_from_mean", weights)?;
    if !(mu.is_finite() && mu > 0.0) {
        return Err(domain("theta_from_mean", format!("mean must be positive, got {mu}")));
    }
    Ok(weighted_shape(weights) / mu)
}
