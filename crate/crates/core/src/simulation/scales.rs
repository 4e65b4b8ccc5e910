//! Distances among the three predictive laws as the sample size grows, on both
//! working scales of the exponential mean.

use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{HlikError, Result};
use crate::model::{exponential_future, ObservedData, ParamScale, UnobservableScale};
use crate::numeric::RngStream;
use crate::prediction::{compare_triple, Distance, GridSpec};

fn default_sizes() -> Vec<usize> {
    vec![1, 2, 5, 10, 50]
}
fn default_lambda() -> f64 {
    1.0
}
fn default_nodes() -> usize {
    GridSpec::default().nodes
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ScaleConfig {
    #[serde(default = "default_sizes", alias = "n")]
    pub sample_sizes: Vec<usize>,
    pub seed: u64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_nodes")]
    pub grid_nodes: usize,
}

impl ScaleConfig {
    pub fn new(sample_sizes: Vec<usize>, seed: u64) -> Self {
        Self {
            sample_sizes,
            seed,
            lambda: default_lambda(),
            grid_nodes: default_nodes(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleStatus {
    Ok,
    ImproperPosterior,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub n: usize,
    pub param_scale: ParamScale,
    pub status: ScaleStatus,
    pub h_vs_pivotal: Option<Distance>,
    pub h_vs_posterior: Option<Distance>,
    pub pivotal_vs_posterior: Option<Distance>,
}

/// One dataset per n (shared by both scales), then the triple comparison on each
/// scale. An improper flat-prior posterior is recorded in the row, not raised.
pub fn scale_sensitivity_study(cfg: &ScaleConfig) -> Result<Vec<ScaleRow>> {
    if cfg.sample_sizes.is_empty() || cfg.sample_sizes.contains(&0) {
        return Err(HlikError::InvalidInput("sample sizes must be positive".into()));
    }
    if !(cfg.lambda > 0.0 && cfg.lambda.is_finite()) {
        return Err(HlikError::InvalidInput(format!("λ = {} must be positive", cfg.lambda)));
    }
    let spec = GridSpec {
        nodes: cfg.grid_nodes,
        ..GridSpec::default()
    };
    let exp = Exp::new(1.0 / cfg.lambda).map_err(|e| HlikError::InvalidInput(e.to_string()))?;
    let mut rows = Vec::new();
    for &n in &cfg.sample_sizes {
        let mut rng = RngStream::derive(cfg.seed, &format!("scales/n={n}")).rng();
        let y = ObservedData::new((0..n).map(|_| exp.sample(&mut rng)).collect())?;
        for scale in [ParamScale::Lambda, ParamScale::LogLambda] {
            let m = exponential_future(UnobservableScale::LogU, scale);
            let row = match compare_triple(m.as_ref(), &y, scale, &spec) {
                Ok(t) => ScaleRow {
                    n,
                    param_scale: scale,
                    status: ScaleStatus::Ok,
                    h_vs_pivotal: Some(t.h_vs_pivotal),
                    h_vs_posterior: Some(t.h_vs_posterior),
                    pivotal_vs_posterior: Some(t.pivotal_vs_posterior),
                },
                Err(HlikError::ImproperPosterior(_)) => ScaleRow {
                    n,
                    param_scale: scale,
                    status: ScaleStatus::ImproperPosterior,
                    h_vs_pivotal: None,
                    h_vs_posterior: None,
                    pivotal_vs_posterior: None,
                },
                Err(e) => return Err(e),
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_scale_is_three_in_one_and_lambda_gap_shrinks() {
        let rows = scale_sensitivity_study(&ScaleConfig::new(vec![1, 2, 10, 50], 7)).unwrap();
        assert_eq!(rows[0].status, ScaleStatus::ImproperPosterior);
        assert_eq!(rows[0].param_scale, ParamScale::Lambda);
        let log_rows: Vec<_> = rows.iter().filter(|r| r.param_scale == ParamScale::LogLambda).collect();
        for r in &log_rows {
            assert_eq!(r.status, ScaleStatus::Ok);
            assert!(r.h_vs_pivotal.unwrap().sup_norm < 1e-6, "{r:?}");
            assert!(r.pivotal_vs_posterior.unwrap().sup_norm < 1e-6);
        }
        let gaps: Vec<f64> = rows
            .iter()
            .filter(|r| r.param_scale == ParamScale::Lambda && r.status == ScaleStatus::Ok)
            .map(|r| {
                assert!(r.h_vs_posterior.unwrap().sup_norm < 1e-6);
                r.h_vs_pivotal.unwrap().sup_norm
            })
            .collect();
        assert_eq!(gaps.len(), 3);
        assert!(gaps.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0), "{gaps:?}");
    }
}
