//! Single-site and block updates shared by the two Gibbs variants.

use rand::Rng;

use crate::error::Result;
use crate::numerics::{categorical_in_place, sample_dirichlet, sample_gamma, LnIntTable};
use crate::observations::Observations;

use super::{Hyperparams, LabelState};

/// Draws `π ~ Dirichlet(1/J + n_1, ..., 1/J + n_J)`.
pub fn update_weights<R: Rng + ?Sized>(
    state: &LabelState,
    hyper: &Hyperparams,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let prior = 1.0 / hyper.n_components as f64;
    let conc: Vec<f64> = state.counts().iter().map(|&n| prior + n as f64).collect();
    sample_dirichlet(&conc, rng)
}

/// Draws `θ ~ Ga(α + Σx_i, β + Σy_i)`.
pub fn update_theta<R: Rng + ?Sized>(
    y: &Observations,
    state: &LabelState,
    hyper: &Hyperparams,
    rng: &mut R,
) -> Result<f64> {
    theta_full_conditional(y.sum(), state.label_sum(), hyper, rng)
}

pub(crate) fn theta_full_conditional<R: Rng + ?Sized>(
    sum_y: f64,
    label_sum: u64,
    hyper: &Hyperparams,
    rng: &mut R,
) -> Result<f64> {
    sample_gamma(
        hyper.alpha as f64 + label_sum as f64,
        hyper.beta + sum_y,
        rng,
    )
}

/// Precomputed pieces of the collapsed label conditional
///
/// ```text
/// ln κ_ij = ln π_j + (j-1) ln y_i - ln Γ(j) + ln (α + S_{-i})_j - j ln(β + Σy)
/// ```
///
/// `α + S_{-i}` is an integer, so the rising factorial is a running sum of
/// tabulated `ln m`.
#[derive(Debug, Clone)]
pub struct CollapsedKernel {
    ln_y: Vec<f64>,
    /// `-ln Γ(j) - j ln(β + Σy)`
    shape_terms: Vec<f64>,
    /// `ln π_j + shape_terms[j]` for the current sweep
    base: Vec<f64>,
    alpha: u64,
    ln_int: LnIntTable,
    scratch: Vec<f64>,
}

impl CollapsedKernel {
    pub fn new(y: &Observations, hyper: &Hyperparams) -> Self {
        let j_max = hyper.n_components;
        let ln_rate = (hyper.beta + y.sum()).ln();
        let mut shape_terms = Vec::with_capacity(j_max);
        let mut ln_fact = 0.0;
        for j in 1..=j_max {
            if j > 1 {
                ln_fact += ((j - 1) as f64).ln();
            }
            shape_terms.push(-ln_fact - j as f64 * ln_rate);
        }
        // largest Pochhammer argument is α + S_max + J - 1 with S_max = n J
        let table_len = (hyper.alpha as usize)
            .saturating_add(y.len().saturating_mul(j_max))
            .saturating_add(j_max + 1);
        CollapsedKernel {
            ln_y: y.values().iter().map(|v| v.ln()).collect(),
            base: shape_terms.clone(),
            shape_terms,
            alpha: hyper.alpha,
            ln_int: LnIntTable::new(table_len),
            scratch: vec![0.0; j_max],
        }
    }

    /// Fixes the mixture weights for the next sweep.
    pub fn set_weights(&mut self, weights: &[f64]) {
        debug_assert_eq!(weights.len(), self.base.len());
        for ((b, &s), &w) in self.base.iter_mut().zip(&self.shape_terms).zip(weights) {
            *b = w.ln() + s;
        }
    }

    /// Unnormalized `ln κ_ij` for `j = 1..=J`, written into `out`.
    pub fn log_weights_into(&self, i: usize, state: &LabelState, out: &mut [f64]) {
        let s_minus_i = state.label_sum() - state.label(i) as u64;
        let a = self.alpha + s_minus_i;
        let ln_y = self.ln_y[i];
        let mut ln_poch = 0.0;
        for (j0, (o, &b)) in out.iter_mut().zip(&self.base).enumerate() {
            ln_poch += self.ln_int.ln(a + j0 as u64);
            *o = b + j0 as f64 * ln_y + ln_poch;
        }
    }

    pub fn log_weights(&self, i: usize, state: &LabelState) -> Vec<f64> {
        let mut out = vec![0.0; self.base.len()];
        self.log_weights_into(i, state, &mut out);
        out
    }

    /// Redraws `x_i` from its collapsed full conditional, updating `state`.
    pub fn update_label<R: Rng + ?Sized>(
        &mut self,
        i: usize,
        state: &mut LabelState,
        rng: &mut R,
    ) -> Result<usize> {
        let mut scratch = std::mem::take(&mut self.scratch);
        self.log_weights_into(i, state, &mut scratch);
        let drawn = categorical_in_place(&mut scratch, rng);
        self.scratch = scratch;
        let label = drawn? + 1;
        state.relabel(i, label);
        Ok(label)
    }
}

/// Standard-Gibbs label conditional `π_ij ∝ π_j f_j(y_i | θ)`.
#[derive(Debug, Clone)]
pub struct StandardKernel {
    ln_y: Vec<f64>,
    /// `ln π_j + j ln θ - ln Γ(j)`; the `-θ y_i` term is constant in `j`.
    base: Vec<f64>,
    ln_gamma_j: Vec<f64>,
    scratch: Vec<f64>,
}

impl StandardKernel {
    pub fn new(y: &Observations, n_components: usize) -> Self {
        let mut ln_gamma_j = Vec::with_capacity(n_components);
        let mut ln_fact = 0.0;
        for j in 1..=n_components {
            if j > 1 {
                ln_fact += ((j - 1) as f64).ln();
            }
            ln_gamma_j.push(ln_fact);
        }
        StandardKernel {
            ln_y: y.values().iter().map(|v| v.ln()).collect(),
            base: vec![0.0; n_components],
            ln_gamma_j,
            scratch: vec![0.0; n_components],
        }
    }

    pub fn set_params(&mut self, weights: &[f64], theta: f64) {
        let ln_theta = theta.ln();
        for (j0, (b, &w)) in self.base.iter_mut().zip(weights).enumerate() {
            *b = w.ln() + (j0 + 1) as f64 * ln_theta - self.ln_gamma_j[j0];
        }
    }

    pub fn log_weights_into(&self, i: usize, out: &mut [f64]) {
        let ln_y = self.ln_y[i];
        for (j0, (o, &b)) in out.iter_mut().zip(&self.base).enumerate() {
            *o = b + j0 as f64 * ln_y;
        }
    }

    pub fn update_label<R: Rng + ?Sized>(
        &mut self,
        i: usize,
        state: &mut LabelState,
        rng: &mut R,
    ) -> Result<usize> {
        let mut scratch = std::mem::take(&mut self.scratch);
        self.log_weights_into(i, &mut scratch);
        let drawn = categorical_in_place(&mut scratch, rng);
        self.scratch = scratch;
        let label = drawn? + 1;
        state.relabel(i, label);
        Ok(label)
    }
}

/// One collapsed single-site update of observation `i` (0-based).
///
/// Builds a fresh [`CollapsedKernel`]; chains reuse one kernel per run.
pub fn update_label_collapsed<R: Rng + ?Sized>(
    i: usize,
    y: &Observations,
    state: &mut LabelState,
    weights: &[f64],
    hyper: &Hyperparams,
    rng: &mut R,
) -> Result<usize> {
    let mut kernel = CollapsedKernel::new(y, hyper);
    kernel.set_weights(weights);
    kernel.update_label(i, state, rng)
}

/// One standard single-site update of observation `i` (0-based).
pub fn update_label_standard<R: Rng + ?Sized>(
    i: usize,
    y: &Observations,
    state: &mut LabelState,
    weights: &[f64],
    theta: f64,
    rng: &mut R,
) -> Result<usize> {
    let mut kernel = StandardKernel::new(y, weights.len());
    kernel.set_params(weights, theta);
    kernel.update_label(i, state, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{log_gamma, log_pochhammer, log_sum_exp, RngStream};

    fn normalize(lw: &[f64]) -> Vec<f64> {
        let lse = log_sum_exp(lw).unwrap();
        lw.iter().map(|v| (v - lse).exp()).collect()
    }

    #[test]
    fn single_component_always_label_one() {
        let y = Observations::new(vec![0.5, 4.0, 9.0]).unwrap();
        let hyper = Hyperparams::new(1, 2, 1.0).unwrap();
        let mut state = LabelState::from_labels(vec![1, 1, 1], 1);
        let mut rng = RngStream::new(0, 0);
        for i in 0..3 {
            assert_eq!(update_label_collapsed(i, &y, &mut state, &[1.0], &hyper, &mut rng).unwrap(), 1);
            assert_eq!(update_label_standard(i, &y, &mut state, &[1.0], 0.7, &mut rng).unwrap(), 1);
        }
        let w = update_weights(&state, &hyper, &mut rng).unwrap();
        assert_eq!(w, vec![1.0]);
    }

    #[test]
    fn collapsed_log_weights_match_direct_formula() {
        let y = Observations::new(vec![0.3, 2.0, 7.5, 1.1]).unwrap();
        let hyper = Hyperparams::new(6, 3, 2.5).unwrap();
        let state = LabelState::from_labels(vec![2, 1, 6, 3], 6);
        let weights = [0.1, 0.2, 0.3, 0.15, 0.05, 0.2];
        let mut kernel = CollapsedKernel::new(&y, &hyper);
        kernel.set_weights(&weights);
        let i = 2;
        let got = kernel.log_weights(i, &state);
        let s_minus = (state.label_sum() - 6) as f64;
        let rate = hyper.beta + y.sum();
        for j in 1..=6usize {
            let jf = j as f64;
            let want = weights[j - 1].ln() + (jf - 1.0) * y.values()[i].ln() - log_gamma(jf).unwrap()
                + log_pochhammer(hyper.alpha as f64 + s_minus, j as u64).unwrap()
                - jf * rate.ln();
            assert!((got[j - 1] - want).abs() < 1e-11, "j = {j}");
        }
        let probs = normalize(&got);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collapsed_exact_ratio_small_case() {
        // n = 1, J = 2, y = (1), α = β = 1, π = (π1, π2):
        // κ_2 / κ_1 = [π2 (1)_2 / 2²] / [π1 (1)_1 / 2] = π2 / π1
        let y = Observations::new(vec![1.0]).unwrap();
        let hyper = Hyperparams::new(2, 1, 1.0).unwrap();
        let state = LabelState::from_labels(vec![1], 2);
        let mut kernel = CollapsedKernel::new(&y, &hyper);
        kernel.set_weights(&[0.3, 0.7]);
        let lw = kernel.log_weights(0, &state);
        assert!(((lw[1] - lw[0]).exp() - 0.7 / 0.3).abs() < 1e-12);

        let mut rng = RngStream::new(17, 0);
        let mut state = state;
        let n = 200_000;
        let mut twos = 0usize;
        for _ in 0..n {
            if kernel.update_label(0, &mut state, &mut rng).unwrap() == 2 {
                twos += 1;
            }
        }
        let freq = twos as f64 / n as f64;
        let se = (0.7 * 0.3 / n as f64).sqrt();
        assert!((freq - 0.7).abs() < 4.0 * se, "freq {freq}");
    }

    #[test]
    fn standard_equal_densities_give_equal_odds() {
        // f_1(1|1) = f_2(1|1) = e^-1
        let y = Observations::new(vec![1.0]).unwrap();
        let mut kernel = StandardKernel::new(&y, 2);
        kernel.set_params(&[0.5, 0.5], 1.0);
        let mut out = [0.0; 2];
        kernel.log_weights_into(0, &mut out);
        assert!((out[0] - out[1]).abs() < 1e-15);
    }

    #[test]
    fn standard_degenerate_weights() {
        let y = Observations::new(vec![3.0]).unwrap();
        let mut state = LabelState::from_labels(vec![1], 5);
        let mut rng = RngStream::new(2, 0);
        for _ in 0..50 {
            let x = update_label_standard(0, &y, &mut state, &[0.0, 1.0, 0.0, 0.0, 0.0], 0.4, &mut rng)
                .unwrap();
            assert_eq!(x, 2);
        }
    }

    #[test]
    fn weights_draw_mean() {
        let hyper = Hyperparams::new(3, 1, 1.0).unwrap();
        let state = LabelState::from_labels(vec![1, 1, 1, 2, 3, 3], 3);
        let mut rng = RngStream::new(8, 0);
        let draws = 40_000;
        let mut acc = [0.0; 3];
        for _ in 0..draws {
            for (a, w) in acc.iter_mut().zip(update_weights(&state, &hyper, &mut rng).unwrap()) {
                *a += w;
            }
        }
        // Dirichlet mean (1/J + n_j) / (1 + n)
        for (a, n_j) in acc.iter().zip([3.0, 1.0, 2.0]) {
            let want = (1.0 / 3.0 + n_j) / 7.0;
            assert!((a / draws as f64 - want).abs() < 0.005);
        }
    }

    #[test]
    fn theta_draw_mean() {
        let hyper = Hyperparams::new(2, 2, 1.0).unwrap();
        let y = Observations::new(vec![1.0, 1.0]).unwrap();
        let state = LabelState::from_labels(vec![1, 1], 2);
        let mut rng = RngStream::new(3, 0);
        let n = 100_000;
        let mean = (0..n)
            .map(|_| update_theta(&y, &state, &hyper, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        // Ga(4, 3): mean 4/3, sd 2/3
        assert!((mean - 4.0 / 3.0).abs() < 4.0 * (2.0 / 3.0) / (n as f64).sqrt());
        // prior only: Ga(α, β)
        let prior_mean = (0..n)
            .map(|_| theta_full_conditional(0.0, 0, &hyper, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!((prior_mean - 2.0).abs() < 4.0 * 2f64.sqrt() / (n as f64).sqrt());
    }
}
