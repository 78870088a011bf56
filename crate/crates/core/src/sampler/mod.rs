//! Posterior simulation for `(π, θ, x)`.
//!
//! Two Gibbs variants target the same posterior:
//!
//! * **collapsed** (default): `θ` integrated out. Each iteration draws
//!   `π | x`, sweeps every label from its collapsed conditional, then draws
//!   `θ | x, y ~ Ga(α + S, β + Σy)` by composition so that every retained
//!   draw carries a `θ`.
//! * **standard**: draws `θ | x`, `π | x`, then sweeps labels given `(π, θ)`.
//!
//! Sweeps visit observations in order `0..n`.

mod chain;
mod labels;
mod updates;

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{domain, GsmError, Result};
use crate::model::{check_simplex, GsmParams};
use crate::numerics::RngStream;
use crate::observations::Observations;

pub use chain::GibbsChain;
pub use labels::{init_labels, LabelState};
pub use updates::{
    update_label_collapsed, update_label_standard, update_theta, update_weights, CollapsedKernel,
    StandardKernel,
};

/// Prior hyperparameters: `J` components, `θ ~ Ga(α, β)` with integer `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    #[serde(rename = "J")]
    pub n_components: usize,
    pub alpha: u64,
    pub beta: f64,
}

impl Hyperparams {
    pub fn new(n_components: usize, alpha: u64, beta: f64) -> Result<Self> {
        let h = Hyperparams {
            n_components,
            alpha,
            beta,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_components == 0 {
            return Err(GsmError::Config("J must be at least 1".into()));
        }
        if self.alpha == 0 {
            return Err(GsmError::Config("alpha must be a positive integer".into()));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(GsmError::Config(format!("beta must be positive, got {}", self.beta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    Collapsed,
    Standard,
}

impl std::str::FromStr for Variant {
    type Err = GsmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "collapsed" => Ok(Variant::Collapsed),
            "standard" => Ok(Variant::Standard),
            other => Err(GsmError::Config(format!("unknown variant '{other}'"))),
        }
    }
}

/// Run length and retention. Burn-in counts toward `iterations`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    #[serde(default)]
    pub variant: Variant,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_thin")]
    pub thin: usize,
}

fn default_thin() -> usize {
    1
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            iterations: 2_000,
            burn_in: 500,
            variant: Variant::Collapsed,
            seed: 0,
            thin: 1,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(GsmError::Config("iterations must be positive".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(GsmError::Config(format!(
                "burn_in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(GsmError::Config("thin must be positive".into()));
        }
        if self.retained() == 0 {
            return Err(GsmError::Config("no draws would be retained".into()));
        }
        Ok(())
    }

    /// Number of retained draws `M = ⌊(iterations - burn_in) / thin⌋`.
    pub fn retained(&self) -> usize {
        self.iterations.saturating_sub(self.burn_in) / self.thin.max(1)
    }

    /// The stream this configuration's seed selects.
    pub fn rng(&self) -> RngStream {
        RngStream::new(self.seed, 0)
    }
}

/// Retained posterior draws of `(π, θ)` and the per-draw number of occupied
/// components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDraws")]
pub struct PosteriorDraws {
    #[serde(rename = "theta")]
    theta_draws: Vec<f64>,
    #[serde(rename = "weights")]
    weights_draws: Vec<Vec<f64>>,
    #[serde(rename = "occupied")]
    occupied_counts: Vec<usize>,
    sum_y: f64,
}

#[derive(Deserialize)]
struct RawDraws {
    theta: Vec<f64>,
    weights: Vec<Vec<f64>>,
    occupied: Vec<usize>,
    #[serde(default)]
    sum_y: f64,
}

impl TryFrom<RawDraws> for PosteriorDraws {
    type Error = GsmError;

    fn try_from(raw: RawDraws) -> Result<Self> {
        PosteriorDraws::new(raw.weights, raw.theta, raw.occupied, raw.sum_y)
    }
}

impl PosteriorDraws {
    pub fn new(
        weights_draws: Vec<Vec<f64>>,
        theta_draws: Vec<f64>,
        occupied_counts: Vec<usize>,
        sum_y: f64,
    ) -> Result<Self> {
        let m = theta_draws.len();
        if m == 0 {
            return Err(domain("PosteriorDraws::new", "no draws"));
        }
        if weights_draws.len() != m || occupied_counts.len() != m {
            return Err(domain("PosteriorDraws::new", "draw vectors differ in length"));
        }
        let j = weights_draws[0].len();
        for row in &weights_draws {
            if row.len() != j {
                return Err(domain("PosteriorDraws::new", "weight rows differ in length"));
            }
            check_simplex("PosteriorDraws::new", row)?;
        }
        if let Some(&t) = theta_draws.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(domain("PosteriorDraws::new", format!("theta draw {t} is not positive")));
        }
        if let Some(&c) = occupied_counts.iter().find(|&&c| c == 0 || c > j) {
            return Err(domain("PosteriorDraws::new", format!("occupied count {c} outside 1..={j}")));
        }
        Ok(PosteriorDraws {
            theta_draws,
            weights_draws,
            occupied_counts,
            sum_y,
        })
    }

    /// Number of retained draws `M`.
    pub fn len(&self) -> usize {
        self.theta_draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta_draws.is_empty()
    }

    pub fn n_components(&self) -> usize {
        self.weights_draws[0].len()
    }

    pub fn theta_draws(&self) -> &[f64] {
        &self.theta_draws
    }

    pub fn weights_draws(&self) -> &[Vec<f64>] {
        &self.weights_draws
    }

    pub fn occupied_counts(&self) -> &[usize] {
        &self.occupied_counts
    }

    pub fn sum_y(&self) -> f64 {
        self.sum_y
    }

    /// Parameters of retained draw `m`.
    pub fn params(&self, m: usize) -> GsmParams {
        GsmParams::new(self.weights_draws[m].clone(), self.theta_draws[m])
            .expect("draws are validated on construction")
    }

    pub fn iter_params(&self) -> impl Iterator<Item = GsmParams> + '_ {
        (0..self.len()).map(|m| self.params(m))
    }

    /// One row per draw: `draw,theta,occupied,w1,...,wJ`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "draw,theta,occupied")?;
        for j in 1..=self.n_components() {
            write!(out, ",w{j}")?;
        }
        writeln!(out)?;
        for m in 0..self.len() {
            write!(out, "{},{},{}", m + 1, self.theta_draws[m], self.occupied_counts[m])?;
            for w in &self.weights_draws[m] {
                write!(out, ",{w}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Runs a chain and returns the retained draws.
pub fn run_chain(
    y: &Observations,
    hyper: &Hyperparams,
    config: &ChainConfig,
    rng: &mut RngStream,
) -> Result<PosteriorDraws> {
    config.validate()?;
    let mut chain = GibbsChain::new(y, *hyper, config.variant)?;
    let m = config.retained();
    let mut weights_draws = Vec::with_capacity(m);
    let mut theta_draws = Vec::with_capacity(m);
    let mut occupied = Vec::with_capacity(m);
    for it in 0..config.iterations {
        chain.step(rng).map_err(|e| GsmError::Chain {
            iteration: it,
            source: Box::new(e),
        })?;
        if it >= config.burn_in && (it - config.burn_in + 1).is_multiple_of(config.thin) {
            weights_draws.push(chain.weights().to_vec());
            theta_draws.push(chain.theta());
            occupied.push(chain.state().occupied());
        }
    }
    log::debug!(
        "chain finished: {} iterations, {} retained, variant {:?}",
        config.iterations,
        theta_draws.len(),
        config.variant
    );
    PosteriorDraws::new(weights_draws, theta_draws, occupied, y.sum())
}
