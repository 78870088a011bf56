//! Validated positive data and the monotone transforms applied before fitting.

use serde::{Deserialize, Serialize};

use crate::error::{GsmError, Result};

/// Strictly increasing map applied to the data (and thresholds) before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    #[default]
    Identity,
    CubeRoot,
}

impl Transform {
    #[inline]
    pub fn apply(self, y: f64) -> f64 {
        match self {
            Transform::Identity => y,
            Transform::CubeRoot => y.cbrt(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Transform::Identity => "identity",
            Transform::CubeRoot => "cube_root",
        }
    }
}

impl std::str::FromStr for Transform {
    type Err = GsmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Transform::Identity),
            "cube_root" => Ok(Transform::CubeRoot),
            other => Err(GsmError::Config(format!("unknown transform '{other}'"))),
        }
    }
}

/// A nonempty vector of strictly positive, finite observations together with
/// the transform that produced it from the raw data.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    values: Vec<f64>,
    transform: Transform,
}

impl Observations {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_transform(values, Transform::Identity)
    }

    pub fn with_transform(values: Vec<f64>, transform: Transform) -> Result<Self> {
        if values.is_empty() {
            return Err(GsmError::Degenerate("no observations".into()));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(GsmError::Degenerate(format!(
                "observation {i} is {v}; values must be positive and finite"
            )));
        }
        Ok(Observations { values, transform })
    }

    /// Applies `transform` to raw (untransformed) observations.
    pub fn transformed(&self, transform: Transform) -> Observations {
        debug_assert_eq!(self.transform, Transform::Identity);
        Observations {
            values: self.values.iter().map(|&y| transform.apply(y)).collect(),
            transform,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn transform(&self) -> Transform {
        self.transform
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.len() as f64
    }

    /// Sample variance with divisor `n - 1` (zero for a single observation).
    pub fn variance(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        self.values.iter().map(|y| (y - m) * (y - m)).sum::<f64>() / (n - 1) as f64
    }
}
