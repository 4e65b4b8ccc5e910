//! Closed-form predictive laws of the ratio r = y_{n+1} / ȳ_n.

use serde::{Deserialize, Serialize};

use crate::error::{HlikError, Result};

/// Improper flat prior used for the posterior predictive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlatPrior {
    /// π(λ) ∝ 1
    FlatLambda,
    /// π(λ) ∝ 1/λ
    FlatLogLambda,
}

/// Density `((k − 1)/n)·(1 + r/n)^{−k}` on r ≥ 0, a Pareto law of order k.
///
/// k = n + 1 is the exact sampling law of r; k = n is the flat-λ posterior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioPareto {
    pub n: usize,
    pub exponent: f64,
}

impl RatioPareto {
    pub fn new(n: usize, exponent: f64) -> Result<Self> {
        if n == 0 || !(exponent > 1.0) {
            return Err(HlikError::InvalidInput(format!(
                "ratio Pareto needs n >= 1 and exponent > 1 (got n={n}, exponent={exponent})"
            )));
        }
        Ok(Self { n, exponent })
    }

    /// Sampling law of the pivot y_{n+1}/ȳ_n.
    pub fn pivotal(n: usize) -> Self {
        Self {
            n: n.max(1),
            exponent: n.max(1) as f64 + 1.0,
        }
    }

    pub fn posterior_flat(n: usize, prior: FlatPrior) -> Result<Self> {
        match prior {
            FlatPrior::FlatLogLambda => Ok(Self::pivotal(n)),
            FlatPrior::FlatLambda if n <= 1 => Err(HlikError::ImproperPosterior(
                "flat prior on λ with a single observation".into(),
            )),
            FlatPrior::FlatLambda => Ok(Self {
                n,
                exponent: n as f64,
            }),
        }
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }

    pub fn density(&self, r: f64) -> f64 {
        if r < 0.0 {
            return 0.0;
        }
        (self.exponent - 1.0) / self.nf() * (1.0 + r / self.nf()).powf(-self.exponent)
    }

    pub fn log_density(&self, r: f64) -> f64 {
        if r < 0.0 {
            return f64::NEG_INFINITY;
        }
        ((self.exponent - 1.0) / self.nf()).ln() - self.exponent * (r / self.nf()).ln_1p()
    }

    pub fn cdf(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        -(-(self.exponent - 1.0) * (r / self.nf()).ln_1p()).exp_m1()
    }

    pub fn quantile(&self, p: f64) -> f64 {
        self.nf() * ((-(1.0 - p).ln() / (self.exponent - 1.0)).exp_m1())
    }

    /// Upper end c of the highest-density set [0, c] with mass 1 − α.
    pub fn hdp_upper(&self, alpha: f64) -> f64 {
        self.nf() * ((-alpha.ln() / (self.exponent - 1.0)).exp_m1())
    }

    /// Density of v = log u when r = k·u, i.e. of log r shifted by −log k.
    pub fn density_of_log(&self, v: f64, k: f64) -> f64 {
        let r = k * v.exp();
        self.density(r) * r
    }
}

/// c(α, n) = n(α^{−1/n} − 1), the pivotal HDP multiplier.
pub fn hdp_multiplier(alpha: f64, n: usize) -> f64 {
    RatioPareto::pivotal(n).hdp_upper(alpha)
}
