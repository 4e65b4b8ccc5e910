use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{HlikError, Result};
use crate::model::{model_with_param_scale, ModelRef, ParamScale};
use crate::prediction::GridSpec;

/// Prediction-interval constructions compared by the coverage experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// v̂ ± z·τ_v with τ²_v from the inverse expected Hessian at θ̂.
    HessianNormal,
    /// Highest-density set of the h-distribution.
    Aphl,
    /// Highest-density set of the exact pivotal law.
    Pivotal,
    /// Highest-density set of the flat-prior posterior predictive.
    PosteriorFlat,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::HessianNormal, Method::Aphl, Method::Pivotal, Method::PosteriorFlat];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::HessianNormal => "hessian-normal",
            Method::Aphl => "aphl",
            Method::Pivotal => "pivotal",
            Method::PosteriorFlat => "posterior-flat",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = HlikError;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| HlikError::InvalidInput(format!("unknown method '{s}'")))
    }
}

fn default_model() -> String {
    "exp-future-log".into()
}
fn default_theta() -> Vec<f64> {
    vec![1.0]
}
fn default_sizes() -> Vec<usize> {
    vec![10]
}
fn default_replications() -> usize {
    10_000
}
fn default_alphas() -> Vec<f64> {
    vec![0.05, 0.1, 0.5]
}
fn default_methods() -> Vec<Method> {
    vec![Method::Pivotal]
}
fn default_scale() -> ParamScale {
    ParamScale::LogLambda
}
fn default_nodes() -> usize {
    GridSpec::default().nodes
}

/// A seeded Monte Carlo experiment. `theta` is on the natural scale; the model is
/// fitted on `param_scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentConfig {
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default = "default_theta")]
    pub theta: Vec<f64>,
    #[serde(default = "default_sizes", alias = "n")]
    pub sample_sizes: Vec<usize>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    pub seed: u64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_scale")]
    pub param_scale: ParamScale,
    #[serde(default = "default_nodes")]
    pub grid_nodes: usize,
}

impl ExperimentConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            model: default_model(),
            theta: default_theta(),
            sample_sizes: default_sizes(),
            replications: default_replications(),
            alphas: default_alphas(),
            seed,
            methods: default_methods(),
            param_scale: default_scale(),
            grid_nodes: default_nodes(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HlikError::InvalidInput(msg));
        if self.replications < 100 {
            return bad(format!("replications must be at least 100, got {}", self.replications));
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.contains(&0) {
            return bad("sample sizes must be a non-empty list of positive integers".into());
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return bad(format!("α = {a} outside (0, 1)"));
        }
        if self.alphas.is_empty() {
            return bad("at least one α level is required".into());
        }
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        if self.grid_nodes < 11 {
            return bad(format!("grid needs at least 11 nodes, got {}", self.grid_nodes));
        }
        let m = self.build_model()?;
        if self.theta.len() != m.theta_dim() {
            return bad(format!("θ has {} entries, model {} needs {}", self.theta.len(), m.name(), m.theta_dim()));
        }
        let wt = self.working_theta();
        if !wt.iter().all(|t| t.is_finite()) || !m.support_theta().contains_interior(&wt) {
            return bad(format!("θ = {:?} outside the parameter space of {}", self.theta, m.name()));
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<ModelRef> {
        model_with_param_scale(&self.model, self.param_scale)
    }

    /// θ on the working scale of the fitted model.
    pub fn working_theta(&self) -> Vec<f64> {
        let map = self.param_scale.map();
        self.theta.iter().map(|t| map.from_base(*t)).collect()
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            nodes: self.grid_nodes,
            ..GridSpec::default()
        }
    }
}
