use crate::observations::Observations;

use super::Hyperparams;

/// Component labels `x_i ∈ 1..=J` with their occupancy counts and label sum.
///
/// Invariants: `Σ_j n_j = n`, `n_j = #{i : x_i = j}`, `S = Σ_i x_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelState {
    labels: Vec<usize>,
    counts: Vec<usize>,
    label_sum: u64,
}

impl LabelState {
    /// Builds a state from 1-based labels. Panics on a label outside `1..=J`.
    pub fn from_labels(labels: Vec<usize>, n_components: usize) -> Self {
        let mut counts = vec![0; n_components];
        let mut label_sum = 0u64;
        for &x in &labels {
            assert!(
                (1..=n_components).contains(&x),
                "label {x} outside 1..={n_components}"
            );
            counts[x - 1] += 1;
            label_sum += x as u64;
        }
        LabelState {
            labels,
            counts,
            label_sum,
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// `n_j` for `j = 1..=J`, stored 0-based.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn label_sum(&self) -> u64 {
        self.label_sum
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_components(&self) -> usize {
        self.counts.len()
    }

    /// Number of components holding at least one observation.
    pub fn occupied(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// Moves observation `i` to component `new_label`, keeping counts and the
    /// label sum in step.
    pub fn relabel(&mut self, i: usize, new_label: usize) {
        debug_assert!((1..=self.counts.len()).contains(&new_label));
        let old = self.labels[i];
        if old == new_label {
            return;
        }
        self.counts[old - 1] -= 1;
        self.counts[new_label - 1] += 1;
        self.label_sum = self.label_sum - old as u64 + new_label as u64;
        self.labels[i] = new_label;
    }

    pub fn is_consistent(&self) -> bool {
        let fresh = LabelState::from_labels(self.labels.clone(), self.counts.len());
        fresh.counts == self.counts
            && fresh.label_sum == self.label_sum
            && self.counts.iter().sum::<usize>() == self.labels.len()
    }
}

/// Starts each observation at the component whose prior-mean location
/// `j / (α/β)` is nearest: `x_i = clamp(round((α/β) y_i), 1, J)`.
pub fn init_labels(y: &Observations, hyper: &Hyperparams) -> LabelState {
    let prior_rate = hyper.alpha as f64 / hyper.beta;
    let j_max = hyper.n_components;
    let labels = y
        .values()
        .iter()
        .map(|&v| {
            let r = (prior_rate * v).round();
            if r.is_nan() || r < 1.0 {
                1
            } else if r >= j_max as f64 {
                j_max
            } else {
                r as usize
            }
        })
        .collect();
    LabelState::from_labels(labels, j_max)
}
