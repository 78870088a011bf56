//! Posterior summaries computed from retained draws.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::GsmParams;
use crate::observations::Observations;
use crate::sampler::PosteriorDraws;

pub const DEFAULT_LEVEL: f64 = 0.95;

/// Rao–Blackwellized estimate of `P(y* > k | y)` with an equal-tailed
/// credible interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub threshold: f64,
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `P(Y > k | π^(m), θ^(m))` for each retained draw.
    pub per_draw: Vec<f64>,
}

/// `point = (1/M) Σ_m Σ_j π_j^(m) (1 - F_j(k | θ^(m)))`; the interval is
/// the `(1-level)/2` and `1-(1-level)/2` empirical quantiles of the per-draw
/// values.
pub fn tail_estimate(draws: &PosteriorDraws, k: f64, level: f64) -> Result<TailEstimate> {
    if k.is_nan() || k < 0.0 {
        return Err(domain("tail_estimate", format!("threshold must be nonnegative, got {k}")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(domain("tail_estimate", format!("level must lie in (0, 1), got {level}")));
    }
    let per_draw = draws
        .iter_params()
        .map(|p| p.tail_prob(k))
        .collect::<Result<Vec<_>>>()?;
    let point = per_draw.iter().sum::<f64>() / per_draw.len() as f64;
    let mut sorted = per_draw.clone();
    sorted.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok(TailEstimate {
        threshold: k,
        point: point.clamp(0.0, 1.0),
        ci_low: quantile_sorted(&sorted, tail),
        ci_high: quantile_sorted(&sorted, 1.0 - tail),
        per_draw,
    })
}

/// [`tail_estimate`] for several thresholds, evaluated in parallel.
pub fn tail_curve(draws: &PosteriorDraws, thresholds: &[f64], level: f64) -> Result<Vec<TailEstimate>> {
    thresholds
        .par_iter()
        .map(|&k| tail_estimate(draws, k, level))
        .collect()
}

/// Linear-interpolation quantile of sorted data (Hyndman–Fan type 7):
/// `h = (M - 1) p`, interpolating between order statistics `⌊h⌋` and `⌊h⌋ + 1`
/// (0-based).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Posterior mean of the density on `grid`: `(1/M) Σ_m f(g | π^(m), θ^(m))`.
pub fn density_curve(draws: &PosteriorDraws, grid: &[f64]) -> Result<Vec<f64>> {
    if let Some(&g) = grid.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
        return Err(domain("density_curve", format!("grid points must be positive, got {g}")));
    }
    let params: Vec<GsmParams> = draws.iter_params().collect();
    let m = params.len() as f64;
    grid.par_iter()
        .map(|&g| {
            let mut total = 0.0;
            for p in &params {
                total += p.density(g)?;
            }
            Ok(total / m)
        })
        .collect()
}

/// Posterior-mean weights (renormalized) and mean `θ`.
pub fn posterior_mean_params(draws: &PosteriorDraws) -> GsmParams {
    let weights = weight_summary(draws).posterior_mean_weights;
    let theta = draws.theta_draws().iter().sum::<f64>() / draws.len() as f64;
    GsmParams::new(weights, theta).expect("mean of valid draws is valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqProbabilities {
    /// Sorted observations.
    pub sorted: Vec<f64>,
    pub model_p: Vec<f64>,
    pub empirical_p: Vec<f64>,
}

/// Model CDF at the posterior-mean parameters against `i / (n + 1)`.
pub fn qq_probabilities(draws: &PosteriorDraws, y: &Observations) -> Result<QqProbabilities> {
    let params = posterior_mean_params(draws);
    let mut sorted = y.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let empirical_p = (1..=sorted.len()).map(|i| i as f64 / (n + 1.0)).collect();
    let model_p = sorted.iter().map(|&v| params.cdf(v)).collect::<Result<Vec<_>>>()?;
    Ok(QqProbabilities {
        sorted,
        model_p,
        empirical_p,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSummary {
    pub posterior_mean_weights: Vec<f64>,
    /// Occupied-component count → fraction of retained draws.
    pub occupied_histogram: BTreeMap<usize, f64>,
}

pub fn weight_summary(draws: &PosteriorDraws) -> WeightSummary {
    let m = draws.len() as f64;
    let mut mean = vec![0.0; draws.n_components()];
    for row in draws.weights_draws() {
        for (acc, w) in mean.iter_mut().zip(row) {
            *acc += w;
        }
    }
    let total: f64 = mean.iter().sum();
    for w in mean.iter_mut() {
        *w /= total;
    }
    let mut counts = BTreeMap::new();
    for &c in draws.occupied_counts() {
        *counts.entry(c).or_insert(0usize) += 1;
    }
    let occupied_histogram = counts.into_iter().map(|(c, n)| (c, n as f64 / m)).collect();
    WeightSummary {
        posterior_mean_weights: mean,
        occupied_histogram,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentKind {
    Mean,
    Variance,
}

/// Model mean or variance of each retained draw.
pub fn moment_trace(draws: &PosteriorDraws, kind: MomentKind) -> Vec<f64> {
    draws
        .iter_params()
        .map(|p| match kind {
            MomentKind::Mean => p.mean(),
            MomentKind::Variance => p.variance(),
        })
        .collect()
}

/// Batch-means Monte Carlo standard error of the mean of a chain trace, with
/// `⌊√M⌋` batches.
pub fn batch_means_se(trace: &[f64]) -> f64 {
    let m = trace.len();
    let n_batches = (m as f64).sqrt().floor() as usize;
    if n_batches < 2 {
        return f64::NAN;
    }
    let size = m / n_batches;
    let used = size * n_batches;
    let grand = trace[..used].iter().sum::<f64>() / used as f64;
    let batch_var = trace[..used]
        .chunks(size)
        .map(|b| {
            let bm = b.iter().sum::<f64>() / size as f64;
            (bm - grand) * (bm - grand)
        })
        .sum::<f64>()
        / (n_batches - 1) as f64;
    (batch_var / n_batches as f64).sqrt()
}
