use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use gsm_core::harness::{run_experiment, ExperimentConfig, Method};
use gsm_core::numerics::{sample_normal, sample_uniform_open, RngStream};
use gsm_core::{GsmParams, Observations};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io::{self, Input, InputDigest, RunManifest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogNormalSpec {
    pub mu: f64,
    pub sigma: f64,
}

/// Classical Pareto components with survival `(scale / y)^shape` for
/// `y >= scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParetoMixSpec {
    pub weights: Vec<f64>,
    pub scales: Vec<f64>,
    pub shapes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gsm(GsmParams),
    Lognormal(LogNormalSpec),
    ParetoMix(ParetoMixSpec),
}

/// Synthetic population: `n` draws from `family`, each raised to `power`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub family: Family,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub power: f64,
}

fn one() -> f64 {
    1.0
}

impl GeneratorSpec {
    pub fn generate(&self) -> CliResult<Observations> {
        if self.n == 0 {
            return Err(CliError::Config("generator n must be positive".into()));
        }
        if !(self.power.is_finite() && self.power > 0.0) {
            return Err(CliError::Config("generator power must be positive".into()));
        }
        let mut rng = RngStream::new(self.seed, 0);
        let base: Vec<f64> = match &self.family {
            Family::Gsm(p) => p.sample(self.n, &mut rng)?.values().to_vec(),
            Family::Lognormal(s) => {
                if !(s.sigma > 0.0 && s.mu.is_finite()) {
                    return Err(CliError::Config("lognormal needs finite mu and sigma > 0".into()));
                }
                (0..self.n).map(|_| (s.mu + s.sigma * sample_normal(&mut rng)).exp()).collect()
            }
            Family::ParetoMix(s) => {
                let k = s.weights.len();
                if k == 0 || s.scales.len() != k || s.shapes.len() != k {
                    return Err(CliError::Config("pareto_mix needs equal-length weights, scales, shapes".into()));
                }
                if s.scales.iter().chain(&s.shapes).any(|v| !(*v > 0.0 && v.is_finite())) {
                    return Err(CliError::Config("pareto_mix scales and shapes must be positive".into()));
                }
                (0..self.n)
                    .map(|_| {
                        let c = gsm_core::numerics::sample_categorical(&s.weights, &mut rng)?;
                        let u = sample_uniform_open(&mut rng);
                        Ok(s.scales[c] * u.powf(-1.0 / s.shapes[c]))
                    })
                    .collect::<gsm_core::Result<Vec<_>>>()?
            }
        };
        Ok(Observations::new(base.into_iter().map(|v| v.powf(self.power)).collect())?)
    }
}

pub struct SimulateArgs {
    pub population: Option<PathBuf>,
    pub generator: Option<PathBuf>,
    pub config: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let start = Instant::now();
    let config_in = Input::read(&args.config)?;
    let mut cfg: ExperimentConfig = io::parse_json(&config_in)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;

    let mut inputs = vec![InputDigest::of("config", &config_in)];
    let (population, generator) = match (&args.population, &args.generator) {
        (Some(path), None) => {
            let input = Input::read(path)?;
            inputs.push(InputDigest::of("population", &input));
            (io::parse_values(&input)?, None)
        }
        (None, Some(path)) => {
            let input = Input::read(path)?;
            inputs.push(InputDigest::of("generator", &input));
            let spec: GeneratorSpec = io::parse_json(&input)?;
            (spec.generate()?, Some(spec))
        }
        _ => {
            return Err(CliError::Config(
                "give exactly one of --population and --generator".into(),
            ))
        }
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let table = pool.install(|| run_experiment(&population, &cfg))?;
    let excluded = table.total_excluded();
    if excluded > 0 {
        log::warn!("{excluded} method-replicate fits were excluded; see fits.json");
    }
    for m in Method::ALL {
        let c = table.cell(m, table.thresholds.len() - 1);
        log::info!("{}: rel_mse {:?}, rel_bias {:?} at k = {}", m.name(), c.rel_mse_pct, c.rel_bias_pct, c.threshold);
    }

    io::create_dir(&args.out)?;
    let write = |name: &str, f: &dyn Fn(&mut Vec<u8>) -> std::io::Result<()>| -> CliResult<()> {
        let mut buf = Vec::new();
        f(&mut buf).map_err(CliError::io(format!("formatting {name}")))?;
        let path = args.out.join(name);
        fs::write(&path, buf).map_err(CliError::io(format!("writing {}", path.display())))
    };
    write("results.csv", &|b| table.write_summary_csv(b))?;
    write("audit.csv", &|b| table.write_audit_csv(b))?;
    io::write_json(&args.out.join("fits.json"), &table)?;

    let config_value = serde_json::json!({
        "experiment": cfg,
        "generator": generator,
        "population_size": population.len(),
    });
    RunManifest::new("simulate", Some(cfg.seed), cfg.transform, inputs, config_value)
        .finish(&args.out, start.elapsed())
}

