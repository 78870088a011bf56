//! Gamma shape mixtures for positive, heavy-tailed data.
//!
//! The model is `f(y) = Σ_{j=1..J} π_j Ga(y | j, θ)`: a mixture of gamma
//! densities with integer shapes `1..J` and a common rate `θ`. Posterior draws
//! of `(π, θ)` come from a Gibbs sampler ([`sampler`]); exceedance
//! probabilities `P(Y > k)` are averaged over draws ([`inference`]) and
//! benchmarked against simpler estimators ([`baselines`], [`harness`]).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod calibrate;
pub mod error;
pub mod harness;
pub mod inference;
pub mod model;
pub mod numerics;
pub mod observations;
pub mod sampler;

pub use calibrate::{calibrate, CalibrationInput};
pub use error::{GsmError, Result};
pub use inference::{tail_estimate, TailEstimate};
pub use model::GsmParams;
pub use observations::{Observations, Transform};
pub use sampler::{run_chain, ChainConfig, Hyperparams, PosteriorDraws, Variant};
