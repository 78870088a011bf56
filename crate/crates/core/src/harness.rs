//! Replicated train/test benchmark.
//!
//! Each replicate draws a simple random training sample without replacement
//! from a finite population, fits every estimator on the (transformed)
//! training sample, and scores its exceedance estimates against the
//! exceedance proportion of the held-out remainder.

use std::fmt::Write as _;
use std::io::{self, Write};

use rand::seq::index::sample as sample_indices;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    edf_tail, lognormal_fit, lognormal_tail, normal_mixture_fit, normal_mixture_tail,
    LogNormalFit, NormalMixtureFit, DEFAULT_K_MAX, DEFAULT_RESTARTS,
};
use crate::calibrate::{calibrate, CalibrationInput};
use crate::error::{GsmError, Result};
use crate::inference::tail_estimate;
use crate::numerics::RngStream;
use crate::observations::{Observations, Transform};
use crate::sampler::{run_chain, ChainConfig, Hyperparams};

const MIN_POPULATION: usize = 20;
const MAX_EXCLUDED_FRACTION: f64 = 0.05;
const SUBSTREAM_CHAIN: u64 = 1;
const SUBSTREAM_MIXTURE: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HyperSource {
    /// The same hyperparameters for every replicate.
    Explicit(Hyperparams),
    /// Recalibrated on each training sample.
    Calibrate {
        #[serde(rename = "J")]
        n_components: usize,
        omega: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Thresholds in original data units, ascending.
    pub thresholds: Vec<f64>,
    #[serde(default = "default_replicates")]
    pub n_replicates: usize,
    #[serde(default = "default_fraction")]
    pub training_fraction: f64,
    #[serde(default)]
    pub transform: Transform,
    #[serde(default)]
    pub seed: u64,
    /// `chain.seed` is ignored; chains draw from the replicate's stream.
    #[serde(default)]
    pub chain: ChainConfig,
    pub hyper_source: HyperSource,
}

fn default_replicates() -> usize {
    50
}

fn default_fraction() -> f64 {
    0.1
}

impl ExperimentConfig {
    pub fn new(thresholds: Vec<f64>, hyper_source: HyperSource) -> Self {
        ExperimentConfig {
            thresholds,
            n_replicates: default_replicates(),
            training_fraction: default_fraction(),
            transform: Transform::Identity,
            seed: 0,
            chain: ChainConfig::default(),
            hyper_source,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.thresholds.is_empty() {
            return Err(GsmError::Config("at least one threshold is required".into()));
        }
        if self.thresholds.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
            return Err(GsmError::Config("thresholds must be positive and finite".into()));
        }
        if self.thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GsmError::Config("thresholds must be strictly ascending".into()));
        }
        if self.n_replicates == 0 {
            return Err(GsmError::Config("n_replicates must be positive".into()));
        }
        if !(self.training_fraction > 0.0 && self.training_fraction < 1.0) {
            return Err(GsmError::Config(format!(
                "training_fraction must lie in (0, 1), got {}",
                self.training_fraction
            )));
        }
        self.chain.validate()?;
        match self.hyper_source {
            HyperSource::Explicit(h) => h.validate(),
            HyperSource::Calibrate {
                n_components,
                omega,
            } => CalibrationInput::new(omega, n_components).map(|_| ()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Edf,
    Lognormal,
    NormalMixture,
    Gsm,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Edf, Method::Lognormal, Method::NormalMixture, Method::Gsm];

    pub fn name(self) -> &'static str {
        match self {
            Method::Edf => "edf",
            Method::Lognormal => "lognormal",
            Method::NormalMixture => "normal_mixture",
            Method::Gsm => "gsm",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Training and test index sets for replicate `r`.
pub fn split_indices(n: usize, r: usize, config: &ExperimentConfig) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < MIN_POPULATION {
        return Err(GsmError::Degenerate(format!(
            "population has {n} values; at least {MIN_POPULATION} are required"
        )));
    }
    let n_train = (config.training_fraction * n as f64).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(GsmError::Config(format!(
            "training_fraction {} leaves an empty training or test set",
            config.training_fraction
        )));
    }
    let mut rng = RngStream::new(config.seed, r as u64);
    let mut train = sample_indices(&mut rng, n, n_train).into_vec();
    train.sort_unstable();
    let mut in_train = vec![false; n];
    for &i in &train {
        in_train[i] = true;
    }
    let test = (0..n).filter(|&i| !in_train[i]).collect();
    Ok((train, test))
}

/// Splits the population into `(train, test)` for replicate `r`.
pub fn split_replicate(
    population: &Observations,
    r: usize,
    config: &ExperimentConfig,
) -> Result<(Observations, Observations)> {
    let (train, test) = split_indices(population.len(), r, config)?;
    let v = population.values();
    let pick = |idx: &[usize]| {
        Observations::with_transform(idx.iter().map(|&i| v[i]).collect(), population.transform())
    };
    Ok((pick(&train)?, pick(&test)?))
}

pub fn apply_transform(y: &Observations, transform: Transform) -> Observations {
    y.transformed(transform)
}

pub fn threshold_transform(k: f64, transform: Transform) -> f64 {
    transform.apply(k)
}

/// Estimates and truths for one replicate. `estimates[method]` is `None`
/// when that method's fit failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub p_true: Vec<f64>,
    pub estimates: Vec<Option<Vec<f64>>>,
    pub errors: Vec<Option<String>>,
    pub lognormal: Option<LogNormalFit>,
    pub normal_mixture: Option<NormalMixtureFit>,
    pub gsm_hyper: Option<Hyperparams>,
}

impl ReplicateRecord {
    pub fn estimates_for(&self, method: Method) -> Option<&[f64]> {
        self.estimates[method.index()].as_deref()
    }

    pub fn error_for(&self, method: Method) -> Option<&str> {
        self.errors[method.index()].as_deref()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub method: Method,
    pub threshold: f64,
    /// `None` when the EDF error is identically zero.
    pub rel_mse_pct: Option<f64>,
    /// `None` when the mean truth is zero.
    pub rel_bias_pct: Option<f64>,
    pub mse: f64,
    pub mean_abs_error: f64,
    pub n_ok: usize,
    pub n_excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub thresholds: Vec<f64>,
    pub cells: Vec<CellSummary>,
    pub replicates: Vec<ReplicateRecord>,
}

impl ResultTable {
    pub fn cell(&self, method: Method, threshold_index: usize) -> &CellSummary {
        &self.cells[method.index() * self.thresholds.len() + threshold_index]
    }

    pub fn total_excluded(&self) -> usize {
        Method::ALL
            .iter()
            .map(|&m| self.cell(m, 0).n_excluded)
            .sum()
    }

    /// `method,threshold,rel_mse_pct,rel_bias_pct,n_ok`; undefined metrics
    /// are left empty.
    pub fn write_summary_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "method,threshold,rel_mse_pct,rel_bias_pct,n_ok")?;
        for c in &self.cells {
            writeln!(
                out,
                "{},{},{},{},{}",
                c.method.name(),
                c.threshold,
                opt(c.rel_mse_pct),
                opt(c.rel_bias_pct),
                c.n_ok
            )?;
        }
        Ok(())
    }

    /// `replicate,method,threshold,abs_err_method,abs_err_gsm`, one row per
    /// replicate, non-GSM method and threshold.
    pub fn write_audit_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "replicate,method,threshold,abs_err_method,abs_err_gsm")?;
        for rec in &self.replicates {
            let gsm = rec.estimates_for(Method::Gsm);
            for method in [Method::Edf, Method::Lognormal, Method::NormalMixture] {
                let est = rec.estimates_for(method);
                for (t, &k) in self.thresholds.iter().enumerate() {
                    let err = |e: Option<&[f64]>| e.map(|e| (e[t] - rec.p_true[t]).abs());
                    writeln!(
                        out,
                        "{},{},{},{},{}",
                        rec.replicate,
                        method.name(),
                        k,
                        opt(err(est)),
                        opt(err(gsm))
                    )?;
                }
            }
        }
        Ok(())
    }
}

fn opt(v: Option<f64>) -> String {
    let mut s = String::new();
    if let Some(v) = v {
        let _ = write!(s, "{v}");
    }
    s
}

/// Runs every replicate on the current rayon pool and aggregates.
pub fn run_experiment(population: &Observations, config: &ExperimentConfig) -> Result<ResultTable> {
    config.validate()?;
    if population.transform() != Transform::Identity {
        return Err(GsmError::Config(
            "the population must be given in original units".into(),
        ));
    }
    let replicates = (0..config.n_replicates)
        .into_par_iter()
        .map(|r| run_replicate(population, r, config))
        .collect::<Result<Vec<_>>>()?;
    aggregate(&config.thresholds, replicates)
}

fn run_replicate(population: &Observations, r: usize, config: &ExperimentConfig) -> Result<ReplicateRecord> {
    let (train, test) = split_replicate(population, r, config)?;
    let p_true = config
        .thresholds
        .iter()
        .map(|&k| edf_tail(test.values(), k))
        .collect::<Result<Vec<_>>>()?;
    let train = apply_transform(&train, config.transform);
    let ks: Vec<f64> = config
        .thresholds
        .iter()
        .map(|&k| threshold_transform(k, config.transform))
        .collect();
    let base = RngStream::new(config.seed, r as u64);

    let mut estimates = vec![None; Method::ALL.len()];
    let mut errors = vec![None; Method::ALL.len()];
    let mut record = |m: Method, res: Result<Vec<f64>>| match res {
        Ok(v) => estimates[m.index()] = Some(v),
        Err(e) => {
            log::debug!("replicate {r}: {} excluded: {e}", m.name());
            errors[m.index()] = Some(e.to_string());
        }
    };

    record(
        Method::Edf,
        ks.iter().map(|&k| edf_tail(train.values(), k)).collect(),
    );

    let ln = lognormal_fit(train.values());
    record(
        Method::Lognormal,
        ln.clone()
            .map(|fit| ks.iter().map(|&k| lognormal_tail(&fit, k)).collect()),
    );

    let mn = normal_mixture_fit(
        train.values(),
        DEFAULT_K_MAX,
        DEFAULT_RESTARTS,
        &mut base.substream(SUBSTREAM_MIXTURE),
    );
    record(
        Method::NormalMixture,
        mn.clone()
            .map(|fit| ks.iter().map(|&k| normal_mixture_tail(&fit, k)).collect()),
    );

    let hyper = match config.hyper_source {
        HyperSource::Explicit(h) => Ok(h),
        HyperSource::Calibrate {
            n_components,
            omega,
        } => CalibrationInput::new(omega, n_components).and_then(|input| calibrate(&train, &input)),
    };
    let gsm = hyper.clone().and_then(|h| {
        let draws = run_chain(&train, &h, &config.chain, &mut base.substream(SUBSTREAM_CHAIN))?;
        ks.iter()
            .map(|&k| tail_estimate(&draws, k, crate::inference::DEFAULT_LEVEL).map(|t| t.point))
            .collect()
    });
    record(Method::Gsm, gsm);

    Ok(ReplicateRecord {
        replicate: r,
        p_true,
        estimates,
        errors,
        lognormal: ln.ok(),
        normal_mixture: mn.ok(),
        gsm_hyper: hyper.ok(),
    })
}

/// Reduces replicate records into per-(method, threshold) cells. Each
/// method's MSE is paired with the EDF's MSE over the replicates where both
/// succeeded.
pub fn aggregate(thresholds: &[f64], replicates: Vec<ReplicateRecord>) -> Result<ResultTable> {
    let total = replicates.len();
    let limit = (MAX_EXCLUDED_FRACTION * total as f64).floor() as usize;
    let mut cells = Vec::with_capacity(Method::ALL.len() * thresholds.len());
    for method in Method::ALL {
        let ok: Vec<&ReplicateRecord> = replicates
            .iter()
            .filter(|r| r.estimates_for(method).is_some() && r.estimates_for(Method::Edf).is_some())
            .collect();
        let excluded = total - ok.len();
        if excluded > limit {
            return Err(GsmError::TooManyExclusions {
                method: method.name().into(),
                excluded,
                total,
            });
        }
        for (t, &k) in thresholds.iter().enumerate() {
            let n = ok.len() as f64;
            let mut mse = 0.0;
            let mut mse_edf = 0.0;
            let mut mae = 0.0;
            let mut mean_est = 0.0;
            let mut mean_true = 0.0;
            for rec in &ok {
                let p = rec.p_true[t];
                let e = rec.estimates_for(method).expect("filtered")[t];
                let e_edf = rec.estimates_for(Method::Edf).expect("filtered")[t];
                mse += (e - p) * (e - p);
                mse_edf += (e_edf - p) * (e_edf - p);
                mae += (e - p).abs();
                mean_est += e;
                mean_true += p;
            }
            let (mse, mse_edf, mae, mean_est, mean_true) =
                (mse / n, mse_edf / n, mae / n, mean_est / n, mean_true / n);
            cells.push(CellSummary {
                method,
                threshold: k,
                rel_mse_pct: (mse_edf > 0.0).then(|| (mse_edf - mse) / mse_edf * 100.0),
                rel_bias_pct: (mean_true > 0.0).then(|| (mean_est - mean_true) / mean_true * 100.0),
                mse,
                mean_abs_error: mae,
                n_ok: ok.len(),
                n_excluded: excluded,
            });
        }
    }
    Ok(ResultTable {
        thresholds: thresholds.to_vec(),
        cells,
        replicates,
    })
}
