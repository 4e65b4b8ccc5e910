use serde::{Deserialize, Serialize};

use crate::error::{HlikError, Result};

/// Working parameterization of a coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleLabel {
    Natural,
    Log,
    Custom,
}

/// Model parameter θ together with the parameterization it is expressed in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    pub values: Vec<f64>,
    pub scale_labels: Vec<ScaleLabel>,
}

impl ParameterVector {
    pub fn new(values: Vec<f64>, scale_labels: Vec<ScaleLabel>) -> Result<Self> {
        if values.is_empty() || values.len() != scale_labels.len() {
            return Err(HlikError::InvalidInput(
                "parameter vector needs one label per coordinate".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(HlikError::NonFinite(format!("parameter {values:?}")));
        }
        Ok(Self {
            values,
            scale_labels,
        })
    }
}

/// Unobservable v together with the transform applied to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnobservableVector {
    pub values: Vec<f64>,
    pub scale_label: ScaleLabel,
}

/// Observed sample with cached summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedData {
    observations: Vec<f64>,
    n: usize,
    mean: f64,
    sum_sq_dev: f64,
}

impl ObservedData {
    pub fn new(observations: Vec<f64>) -> Result<Self> {
        if observations.is_empty() {
            return Err(HlikError::InvalidInput("data must contain at least one observation".into()));
        }
        if let Some(bad) = observations.iter().find(|y| !y.is_finite()) {
            return Err(HlikError::InvalidInput(format!("non-finite observation {bad}")));
        }
        let n = observations.len();
        let mean = observations.iter().sum::<f64>() / n as f64;
        let sum_sq_dev = observations.iter().map(|y| (y - mean) * (y - mean)).sum();
        Ok(Self {
            observations,
            n,
            mean,
            sum_sq_dev,
        })
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Sample mean ȳ_n.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// U_n = n·ȳ_n.
    pub fn sum(&self) -> f64 {
        self.n as f64 * self.mean
    }

    /// Σ (y_i − ȳ)².
    pub fn sum_sq_dev(&self) -> f64 {
        self.sum_sq_dev
    }

    pub fn min(&self) -> f64 {
        self.observations.iter().copied().fold(f64::INFINITY, f64::min)
    }
}
