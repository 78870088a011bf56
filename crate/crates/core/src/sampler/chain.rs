use crate::error::Result;
use crate::numerics::RngStream;
use crate::observations::Observations;

use super::updates::theta_full_conditional;
use super::{init_labels, update_weights, CollapsedKernel, Hyperparams, LabelState, StandardKernel, Variant};

#[derive(Debug, Clone)]
enum Kernel {
    Collapsed(CollapsedKernel),
    Standard(StandardKernel),
}

/// A Gibbs chain advanced one full iteration at a time.
///
/// Exposes the label state between iterations, which `run_chain` does not
/// retain.
#[derive(Debug, Clone)]
pub struct GibbsChain {
    hyper: Hyperparams,
    sum_y: f64,
    state: LabelState,
    weights: Vec<f64>,
    theta: f64,
    kernel: Kernel,
}

impl GibbsChain {
    pub fn new(y: &Observations, hyper: Hyperparams, variant: Variant) -> Result<Self> {
        hyper.validate()?;
        let state = init_labels(y, &hyper);
        let j = hyper.n_components;
        let kernel = match variant {
            Variant::Collapsed => Kernel::Collapsed(CollapsedKernel::new(y, &hyper)),
            Variant::Standard => Kernel::Standard(StandardKernel::new(y, j)),
        };
        Ok(GibbsChain {
            hyper,
            sum_y: y.sum(),
            state,
            weights: vec![1.0 / j as f64; j],
            theta: hyper.alpha as f64 / hyper.beta,
            kernel,
        })
    }

    /// One full iteration of the configured variant.
    pub fn step(&mut self, rng: &mut RngStream) -> Result<()> {
        let n = self.state.len();
        match &mut self.kernel {
            Kernel::Collapsed(kernel) => {
                self.weights = update_weights(&self.state, &self.hyper, rng)?;
                kernel.set_weights(&self.weights);
                for i in 0..n {
                    kernel.update_label(i, &mut self.state, rng)?;
                }
                self.theta = theta_full_conditional(self.sum_y, self.state.label_sum(), &self.hyper, rng)?;
            }
            Kernel::Standard(kernel) => {
                self.theta = theta_full_conditional(self.sum_y, self.state.label_sum(), &self.hyper, rng)?;
                self.weights = update_weights(&self.state, &self.hyper, rng)?;
                kernel.set_params(&self.weights, self.theta);
                for i in 0..n {
                    kernel.update_label(i, &mut self.state, rng)?;
                }
            }
        }
        debug_assert!(self.state.is_consistent());
        Ok(())
    }

    pub fn state(&self) -> &LabelState {
        &self.state
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}
