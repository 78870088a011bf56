//! Univariate Gaussian mixtures with unequal variances, fitted by EM for each
//! `K = 1..=k_max` and selected by BIC.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GsmError, Result};
use crate::numerics::normal_sf;

pub const DEFAULT_K_MAX: usize = 9;
pub const DEFAULT_RESTARTS: usize = 5;
const MAX_EM_ITER: usize = 500;
const LL_TOL: f64 = 1e-8;
const VAR_FLOOR_FRACTION: f64 = 1e-8;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalMixtureFit {
    pub n_components: usize,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub weights: Vec<f64>,
    pub log_likelihood: f64,
    /// `-2 ℓ + (3K - 1) ln n`
    pub bic: f64,
}

/// Fits `K = 1..=k_max` and returns the BIC-minimizing mixture. Restart 0
/// starts from data quantiles; later restarts start from randomly chosen
/// observations.
pub fn normal_mixture_fit<R: Rng + ?Sized>(
    values: &[f64],
    k_max: usize,
    restarts: usize,
    rng: &mut R,
) -> Result<NormalMixtureFit> {
    let n = values.len();
    if k_max == 0 || restarts == 0 {
        return Err(GsmError::Config("k_max and restarts must be positive".into()));
    }
    if n < 2 * k_max {
        return Err(GsmError::Degenerate(format!(
            "normal mixture with k_max = {k_max} needs at least {} observations, got {n}",
            2 * k_max
        )));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    if !(var > 0.0) {
        return Err(GsmError::Degenerate("all observations are equal".into()));
    }
    let var_floor = VAR_FLOOR_FRACTION * var;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);

    let mut best: Option<NormalMixtureFit> = None;
    for k in 1..=k_max {
        let mut best_k: Option<NormalMixtureFit> = None;
        for r in 0..restarts {
            let init = if r == 0 {
                quantile_init(&sorted, k, var)
            } else {
                random_init(values, k, var, rng)
            };
            if let Some(fit) = run_em(values, init, var_floor) {
                if best_k.as_ref().is_none_or(|b| fit.log_likelihood > b.log_likelihood) {
                    best_k = Some(fit);
                }
            }
            if k == 1 {
                // EM from any start reaches the same single-Gaussian MLE
                break;
            }
        }
        let fit = best_k.ok_or(GsmError::EmFailure { k, restarts })?;
        if best.as_ref().is_none_or(|b| fit.bic < b.bic) {
            best = Some(fit);
        }
    }
    Ok(best.expect("k_max >= 1"))
}

/// `Σ_c w_c (1 - Φ((k - μ_c) / σ_c))`.
pub fn normal_mixture_tail(fit: &NormalMixtureFit, k: f64) -> f64 {
    fit.weights
        .iter()
        .zip(&fit.means)
        .zip(&fit.sds)
        .map(|((w, m), s)| w * normal_sf((k - m) / s))
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

struct Components {
    weights: Vec<f64>,
    means: Vec<f64>,
    vars: Vec<f64>,
}

fn quantile_init(sorted: &[f64], k: usize, var: f64) -> Components {
    let n = sorted.len();
    let means = (0..k)
        .map(|c| {
            let pos = ((c as f64 + 0.5) / k as f64 * n as f64) as usize;
            sorted[pos.min(n - 1)]
        })
        .collect();
    Components {
        weights: vec![1.0 / k as f64; k],
        means,
        vars: vec![var / (k * k) as f64; k],
    }
}

fn random_init<R: Rng + ?Sized>(values: &[f64], k: usize, var: f64, rng: &mut R) -> Components {
    let means = sample_indices(rng, values.len(), k)
        .into_iter()
        .map(|i| values[i])
        .collect();
    Components {
        weights: vec![1.0 / k as f64; k],
        means,
        vars: vec![var; k],
    }
}

fn run_em(values: &[f64], mut comp: Components, var_floor: f64) -> Option<NormalMixtureFit> {
    let n = values.len();
    let k = comp.weights.len();
    let mut resp = vec![0.0; n * k];
    let mut prev_ll = f64::NEG_INFINITY;
    let mut ll = f64::NEG_INFINITY;
    for iter in 0..MAX_EM_ITER {
        ll = e_step(values, &comp, &mut resp);
        if !ll.is_finite() {
            return None;
        }
        if iter > 0 && (ll - prev_ll).abs() < LL_TOL {
            break;
        }
        prev_ll = ll;
        // M-step
        for c in 0..k {
            let mut nk = 0.0;
            let mut sx = 0.0;
            for (i, &x) in values.iter().enumerate() {
                let r = resp[i * k + c];
                nk += r;
                sx += r * x;
            }
            if !(nk > 1e-10 * n as f64) {
                return None;
            }
            let mu = sx / nk;
            let mut sxx = 0.0;
            for (i, &x) in values.iter().enumerate() {
                sxx += resp[i * k + c] * (x - mu) * (x - mu);
            }
            comp.weights[c] = nk / n as f64;
            comp.means[c] = mu;
            comp.vars[c] = (sxx / nk).max(var_floor);
        }
    }
    let ll = if ll.is_finite() { e_step(values, &comp, &mut resp) } else { ll };
    if !ll.is_finite() {
        return None;
    }
    let bic = -2.0 * ll + (3 * k - 1) as f64 * (n as f64).ln();
    Some(NormalMixtureFit {
        n_components: k,
        means: comp.means,
        sds: comp.vars.iter().map(|v| v.sqrt()).collect(),
        weights: comp.weights,
        log_likelihood: ll,
        bic,
    })
}

/// Fills responsibilities and returns the log-likelihood.
fn e_step(values: &[f64], comp: &Components, resp: &mut [f64]) -> f64 {
    let k = comp.weights.len();
    let consts: Vec<f64> = (0..k)
        .map(|c| comp.weights[c].ln() - 0.5 * comp.vars[c].ln() - LN_SQRT_2PI)
        .collect();
    let mut ll = 0.0;
    for (i, &x) in values.iter().enumerate() {
        let row = &mut resp[i * k..(i + 1) * k];
        let mut max = f64::NEG_INFINITY;
        for c in 0..k {
            let d = x - comp.means[c];
            row[c] = consts[c] - 0.5 * d * d / comp.vars[c];
            max = max.max(row[c]);
        }
        let mut total = 0.0;
        for r in row.iter_mut() {
            *r = (*r - max).exp();
            total += *r;
        }
        for r in row.iter_mut() {
            *r /= total;
        }
        ll += max + total.ln();
    }
    ll
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{sample_normal, RngStream};

    #[test]
    fn single_component_is_the_gaussian_mle() {
        let mut rng = RngStream::new(1, 0);
        let x: Vec<f64> = (0..300).map(|_| 5.0 + 2.0 * sample_normal(&mut rng)).collect();
        let fit = normal_mixture_fit(&x, 1, 3, &mut rng).unwrap();
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let sd = (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
        assert_eq!(fit.n_components, 1);
        assert!((fit.means[0] - mean).abs() < 1e-12);
        assert!((fit.sds[0] - sd).abs() < 1e-12);
        assert!((normal_mixture_tail(&fit, mean) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn separated_clusters_select_two() {
        let mut rng = RngStream::new(2, 0);
        let x: Vec<f64> = (0..400)
            .map(|i| if i % 2 == 0 { -10.0 } else { 10.0 } + sample_normal(&mut rng))
            .collect();
        let fit = normal_mixture_fit(&x, DEFAULT_K_MAX, DEFAULT_RESTARTS, &mut rng).unwrap();
        assert_eq!(fit.n_components, 2);
        let mut means = fit.means.clone();
        means.sort_by(f64::total_cmp);
        assert!((means[0] + 10.0).abs() < 0.2);
        assert!((means[1] - 10.0).abs() < 0.2);
        assert!((fit.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn seeded_refit_is_identical() {
        let mut rng = RngStream::new(3, 0);
        let x: Vec<f64> = (0..200).map(|_| sample_normal(&mut rng).exp()).collect();
        let a = normal_mixture_fit(&x, 4, 3, &mut RngStream::new(9, 1)).unwrap();
        let b = normal_mixture_fit(&x, 4, 3, &mut RngStream::new(9, 1)).unwrap();
        assert_eq!(a, b);
        for k in [-1.0, 0.5, 3.0, 100.0] {
            let t = normal_mixture_tail(&a, k);
            assert!((0.0..=1.0).contains(&t));
        }
    }

    #[test]
    fn too_few_points() {
        let mut rng = RngStream::new(0, 0);
        assert!(normal_mixture_fit(&[1.0, 2.0, 3.0], 2, 1, &mut rng).is_err());
        assert!(normal_mixture_fit(&[1.0; 20], 2, 1, &mut rng).is_err());
    }
}
