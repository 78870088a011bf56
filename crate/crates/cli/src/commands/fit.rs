use std::path::Path;
use std::time::Instant;

use gsm_core::calibrate::{calibrate_with_report, diagnose_fit, CalibrationInput, DEFAULT_OMEGA};
use gsm_core::inference::density_curve;
use gsm_core::{run_chain, ChainConfig, Hyperparams, Transform, Variant};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io::{self, Input, InputDigest, RunManifest};

const DENSITY_POINTS: usize = 200;

/// Fit configuration as read from JSON. Either `alpha` and `beta` or
/// `omega` (default 0.3) may be given.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    #[serde(rename = "J")]
    pub n_components: usize,
    pub alpha: Option<u64>,
    pub beta: Option<f64>,
    pub omega: Option<f64>,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default)]
    pub variant: Variant,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub transform: Transform,
    #[serde(default = "default_thin")]
    pub thin: usize,
}

fn default_iterations() -> usize {
    ChainConfig::default().iterations
}

fn default_burn_in() -> usize {
    ChainConfig::default().burn_in
}

fn default_thin() -> usize {
    1
}

/// Every setting after defaults and calibration are applied.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedFit {
    #[serde(rename = "J")]
    pub n_components: usize,
    pub alpha: u64,
    pub beta: f64,
    pub omega: Option<f64>,
    pub theta_tilde: Option<f64>,
    pub spans_range: Option<bool>,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub variant: Variant,
    pub seed: u64,
    pub transform: Transform,
}

pub fn run(data: &Path, config: &Path, out: &Path, seed: Option<u64>) -> CliResult<()> {
    let start = Instant::now();
    let data_in = Input::read(data)?;
    let config_in = Input::read(config)?;
    let cfg: FitConfig = io::parse_json(&config_in)?;
    let raw = io::parse_values(&data_in)?;
    let y = raw.transformed(cfg.transform);

    let chain = ChainConfig {
        iterations: cfg.iterations,
        burn_in: cfg.burn_in,
        variant: cfg.variant,
        seed: seed.unwrap_or(cfg.seed),
        thin: cfg.thin,
    };
    chain.validate()?;

    let (hyper, omega, theta_tilde, spans_range) = match (cfg.alpha, cfg.beta, cfg.omega) {
        (Some(alpha), Some(beta), None) => (Hyperparams::new(cfg.n_components, alpha, beta)?, None, None, None),
        (None, None, omega) => {
            let omega = omega.unwrap_or(DEFAULT_OMEGA);
            let cal = calibrate_with_report(&y, &CalibrationInput::new(omega, cfg.n_components)?)?;
            (cal.hyper, Some(omega), Some(cal.theta_tilde), Some(cal.spans_range))
        }
        _ => {
            return Err(CliError::Config(
                "give either both alpha and beta, or omega (or neither)".into(),
            ))
        }
    };

    let resolved = ResolvedFit {
        n_components: hyper.n_components,
        alpha: hyper.alpha,
        beta: hyper.beta,
        omega,
        theta_tilde,
        spans_range,
        iterations: chain.iterations,
        burn_in: chain.burn_in,
        thin: chain.thin,
        variant: chain.variant,
        seed: chain.seed,
        transform: cfg.transform,
    };

    log::info!(
        "fitting n = {} with J = {}, alpha = {}, beta = {}",
        y.len(),
        hyper.n_components,
        hyper.alpha,
        hyper.beta
    );
    let draws = run_chain(&y, &hyper, &chain, &mut chain.rng())?;
    let report = diagnose_fit(&draws, &y)?;
    for flag in &report.flags {
        log::warn!("diagnostic flag: {flag:?}");
    }

    let top = y.max() * 1.1;
    let grid: Vec<f64> = (1..=DENSITY_POINTS)
        .map(|i| top * i as f64 / DENSITY_POINTS as f64)
        .collect();
    let density = density_curve(&draws, &grid)?;

    io::create_dir(out)?;
    io::write_json(&out.join("draws.json"), &draws)?;
    io::write_json(&out.join("diagnostics.json"), &report)?;
    io::write_csv(&out.join("density.csv"), &["y", "density"], grid.iter().zip(&density))?;
    let config_value = serde_json::to_value(&resolved).map_err(|e| CliError::Runtime(e.to_string()))?;
    RunManifest::new(
        "fit",
        Some(chain.seed),
        cfg.transform,
        vec![InputDigest::of("data", &data_in), InputDigest::of("config", &config_in)],
        config_value,
    )
    .finish(out, start.elapsed())
}
