//! Empirical-Bayes choice of `(α, β)` and posterior checks on `J`.
//!
//! The recipe: `θ̃ = J / max(y)` is the candidate prior mean of `θ`; a prior
//! weight `ω` fixes `β = ω Σy / (1 - ω)` so that `ω = β / (β + Σy)`; then
//! `α = round(θ̃ β)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{GsmError, Result};
use crate::observations::Observations;
use crate::sampler::{Hyperparams, PosteriorDraws};

pub const DEFAULT_OMEGA: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationInput {
    pub omega: f64,
    #[serde(rename = "J")]
    pub n_components: usize,
}

impl CalibrationInput {
    pub fn new(omega: f64, n_components: usize) -> Result<Self> {
        if !(omega > 0.0 && omega < 1.0) {
            return Err(GsmError::Config(format!("omega must lie in (0, 1), got {omega}")));
        }
        if n_components == 0 {
            return Err(GsmError::Config("J must be at least 1".into()));
        }
        if !(0.2..=0.5).contains(&omega) {
            log::warn!("omega = {omega} is outside the usual 0.2-0.5 band");
        }
        Ok(CalibrationInput {
            omega,
            n_components,
        })
    }
}

/// `θ̃ = J / max(y)` and whether the first component mean `1/θ̃` does not
/// exceed `min(y)`.
pub fn suggest_theta_tilde(y: &Observations, n_components: usize) -> (f64, bool) {
    let theta_tilde = n_components as f64 / y.max();
    let spans_range = 1.0 / theta_tilde <= y.min();
    (theta_tilde, spans_range)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub hyper: Hyperparams,
    pub theta_tilde: f64,
    pub spans_range: bool,
}

/// Calibrated hyperparameters plus the range check. A failed range check is
/// logged as a warning, not returned as an error.
pub fn calibrate_with_report(y: &Observations, input: &CalibrationInput) -> Result<Calibration> {
    let (theta_tilde, spans_range) = suggest_theta_tilde(y, input.n_components);
    if !spans_range {
        log::warn!(
            "first component mean {:.6} exceeds min(y) = {:.6}; consider a larger J or a \
             transform of the data (log or root)",
            1.0 / theta_tilde,
            y.min()
        );
    }
    let beta = input.omega * y.sum() / (1.0 - input.omega);
    // f64::round rounds half away from zero
    let alpha = (theta_tilde * beta).round().max(1.0) as u64;
    Ok(Calibration {
        hyper: Hyperparams::new(input.n_components, alpha, beta)?,
        theta_tilde,
        spans_range,
    })
}

pub fn calibrate(y: &Observations, input: &CalibrationInput) -> Result<Hyperparams> {
    Ok(calibrate_with_report(y, input)?.hyper)
}

/// Flags raised by [`diagnose_fit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticFlag {
    /// Sample mean outside the central 99% of the posterior model means.
    MeanOutsidePosterior,
    /// Sample variance outside the central 99% of the posterior model variances.
    VarianceOutsidePosterior,
    /// The highest-index component in use sits above `0.9 J`.
    HeaviestComponentNearJ,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub mean_draws: Vec<f64>,
    pub var_draws: Vec<f64>,
    pub sample_mean: f64,
    pub sample_var: f64,
    /// Occupied-component count → number of retained draws.
    pub occupied_hist: BTreeMap<usize, usize>,
    /// 1-based index of the highest component whose posterior-mean weight
    /// marks it as used.
    pub heaviest_component: usize,
    pub n_components: usize,
    pub flags: Vec<DiagnosticFlag>,
}

/// Posterior checks of the model mean, variance and use of the top components.
///
/// A component counts as used when its posterior-mean weight is at least
/// `1 / (2 (n + 1))`, i.e. it holds about half an observation on average.
pub fn diagnose_fit(draws: &PosteriorDraws, y: &Observations) -> Result<DiagnosticReport> {
    if draws.len() < 2 {
        return Err(GsmError::Degenerate("diagnostics need at least two draws".into()));
    }
    let mean_draws: Vec<f64> = draws.iter_params().map(|p| p.mean()).collect();
    let var_draws: Vec<f64> = draws.iter_params().map(|p| p.variance()).collect();
    let sample_mean = y.mean();
    let sample_var = y.variance();

    let mut flags = Vec::new();
    if !within_central(&mean_draws, sample_mean, 0.99) {
        flags.push(DiagnosticFlag::MeanOutsidePosterior);
    }
    if !within_central(&var_draws, sample_var, 0.99) {
        flags.push(DiagnosticFlag::VarianceOutsidePosterior);
    }

    let j = draws.n_components();
    let mean_weights = crate::inference::weight_summary(draws).posterior_mean_weights;
    let used = 1.0 / (2.0 * (y.len() as f64 + 1.0));
    let heaviest_component = mean_weights
        .iter()
        .rposition(|&w| w >= used)
        .map(|i| i + 1)
        .unwrap_or(1);
    if heaviest_component as f64 > 0.9 * j as f64 {
        flags.push(DiagnosticFlag::HeaviestComponentNearJ);
    }

    let mut occupied_hist = BTreeMap::new();
    for &c in draws.occupied_counts() {
        *occupied_hist.entry(c).or_insert(0) += 1;
    }

    Ok(DiagnosticReport {
        mean_draws,
        var_draws,
        sample_mean,
        sample_var,
        occupied_hist,
        heaviest_component,
        n_components: j,
        flags,
    })
}

fn within_central(draws: &[f64], value: f64, level: f64) -> bool {
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let lo = crate::inference::quantile_sorted(&sorted, tail);
    let hi = crate::inference::quantile_sorted(&sorted, 1.0 - tail);
    lo <= value && value <= hi
}
