//! Reparameterization wrappers.
//!
//! A wrapped model works in coordinates x related to the base model's coordinates by
//! a componentwise monotone map `base = g(x)`. Unobservable maps add the log-Jacobian
//! `log g'(x)` to `log f(v)`; parameter maps do not. Analytic derivatives of the base
//! model are carried through by the chain rule.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::data::{ObservedData, ScaleLabel};
use super::joint::{Derivatives, JointModel, McRng, ModelRef, Oracles};
use crate::error::{HlikError, Result};
use crate::numeric::{BoxDomain, Interval};

/// Monotone increasing map from working coordinate x to base coordinate g(x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ScaleMap {
    Identity,
    /// base = e^x
    Log,
    /// base = lo + (hi − lo)·σ(x)
    Logit { lo: f64, hi: f64 },
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl ScaleMap {
    pub fn name(&self) -> &'static str {
        match self {
            ScaleMap::Identity => "identity",
            ScaleMap::Log => "log",
            ScaleMap::Logit { .. } => "logit",
        }
    }

    pub fn label(&self) -> ScaleLabel {
        match self {
            ScaleMap::Identity => ScaleLabel::Natural,
            ScaleMap::Log => ScaleLabel::Log,
            ScaleMap::Logit { .. } => ScaleLabel::Custom,
        }
    }

    pub fn to_base(&self, x: f64) -> f64 {
        match *self {
            ScaleMap::Identity => x,
            ScaleMap::Log => x.exp(),
            ScaleMap::Logit { lo, hi } => lo + (hi - lo) * sigmoid(x),
        }
    }

    pub fn from_base(&self, u: f64) -> f64 {
        match *self {
            ScaleMap::Identity => u,
            ScaleMap::Log => u.ln(),
            ScaleMap::Logit { lo, hi } => {
                let p = (u - lo) / (hi - lo);
                (p / (1.0 - p)).ln()
            }
        }
    }

    /// g'(x)
    pub fn d1(&self, x: f64) -> f64 {
        match *self {
            ScaleMap::Identity => 1.0,
            ScaleMap::Log => x.exp(),
            ScaleMap::Logit { lo, hi } => {
                let s = sigmoid(x);
                (hi - lo) * s * (1.0 - s)
            }
        }
    }

    /// g''(x)
    pub fn d2(&self, x: f64) -> f64 {
        match *self {
            ScaleMap::Identity => 0.0,
            ScaleMap::Log => x.exp(),
            ScaleMap::Logit { lo, hi } => {
                let s = sigmoid(x);
                (hi - lo) * s * (1.0 - s) * (1.0 - 2.0 * s)
            }
        }
    }

    /// log g'(x) and its first two derivatives.
    pub fn log_jacobian(&self, x: f64) -> (f64, f64, f64) {
        match *self {
            ScaleMap::Identity => (0.0, 0.0, 0.0),
            ScaleMap::Log => (x, 1.0, 0.0),
            ScaleMap::Logit { lo, hi } => {
                let s = sigmoid(x);
                // log σ(x) = −softplus(−x), log(1 − σ(x)) = −softplus(x)
                let softplus = |z: f64| if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
                (
                    (hi - lo).ln() - softplus(-x) - softplus(x),
                    1.0 - 2.0 * s,
                    -2.0 * s * (1.0 - s),
                )
            }
        }
    }

    /// Image of a base-coordinate interval in working coordinates.
    pub fn map_interval(&self, base: Interval) -> Result<Interval> {
        match *self {
            ScaleMap::Identity => Ok(base),
            ScaleMap::Log => {
                if base.lower < 0.0 {
                    return Err(HlikError::Unsupported(format!(
                        "log map needs a non-negative support, got [{}, {}]",
                        base.lower, base.upper
                    )));
                }
                Interval::new(base.lower.ln(), base.upper.ln())
            }
            ScaleMap::Logit { lo, hi } => {
                if base.lower != lo || base.upper != hi || !base.is_finite() {
                    return Err(HlikError::Unsupported(format!(
                        "logit map on [{lo}, {hi}] does not match support [{}, {}]",
                        base.lower, base.upper
                    )));
                }
                Ok(Interval::real_line())
            }
        }
    }

    /// Logit map fitted to a bounded interval.
    pub fn logit_for(interval: Interval) -> Result<Self> {
        if !interval.is_finite() {
            return Err(HlikError::Unsupported("logit map needs a bounded support".into()));
        }
        Ok(ScaleMap::Logit {
            lo: interval.lower,
            hi: interval.upper,
        })
    }
}

/// A base model seen through componentwise maps on θ and on v.
#[derive(Debug, Clone)]
pub struct Transformed {
    base: ModelRef,
    theta_maps: Vec<ScaleMap>,
    v_maps: Vec<ScaleMap>,
    oracles: Oracles,
    name: String,
}

impl Transformed {
    pub fn new(base: ModelRef, theta_maps: Vec<ScaleMap>, v_maps: Vec<ScaleMap>) -> Result<Self> {
        if theta_maps.len() != base.theta_dim() || v_maps.len() != base.v_dim() {
            return Err(HlikError::InvalidInput("one map per coordinate required".into()));
        }
        let probe = base.theta_range();
        let mid: Vec<f64> = probe.axes.iter().map(|a| a.center()).collect();
        for (m, axis) in v_maps.iter().zip(&base.support_v(&mid).axes) {
            m.map_interval(*axis)?;
        }
        for (m, axis) in theta_maps.iter().zip(&base.support_theta().axes) {
            m.map_interval(*axis)?;
        }
        let tag = |maps: &[ScaleMap]| {
            maps.iter()
                .map(|m| m.name())
                .collect::<Vec<_>>()
                .join(",")
        };
        let name = format!("{}[θ:{};v:{}]", base.name(), tag(&theta_maps), tag(&v_maps));
        Ok(Self {
            base,
            theta_maps,
            v_maps,
            oracles: Oracles::default(),
            name,
        })
    }

    /// Transform only the unobservable.
    pub fn unobservable(base: ModelRef, map: ScaleMap) -> Result<Self> {
        let p = base.theta_dim();
        let d = base.v_dim();
        Self::new(base, vec![ScaleMap::Identity; p], vec![map; d])
    }

    /// Transform only the parameter.
    pub fn parameter(base: ModelRef, map: ScaleMap) -> Result<Self> {
        let p = base.theta_dim();
        let d = base.v_dim();
        Self::new(base, vec![map; p], vec![ScaleMap::Identity; d])
    }

    pub fn with_oracles(mut self, oracles: Oracles) -> Self {
        self.oracles = oracles;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn base(&self) -> &ModelRef {
        &self.base
    }

    fn theta_base(&self, theta: &[f64]) -> Vec<f64> {
        self.theta_maps.iter().zip(theta).map(|(m, &x)| m.to_base(x)).collect()
    }

    fn v_base(&self, v: &[f64]) -> Vec<f64> {
        self.v_maps.iter().zip(v).map(|(m, &x)| m.to_base(x)).collect()
    }

    fn all_maps(&self) -> impl Iterator<Item = &ScaleMap> {
        self.theta_maps.iter().chain(&self.v_maps)
    }

    fn chain(&self, base: Derivatives, theta: &[f64], v: &[f64]) -> Derivatives {
        let x: Vec<f64> = theta.iter().chain(v).copied().collect();
        let c: Vec<f64> = self.all_maps().zip(&x).map(|(m, &xi)| m.d1(xi)).collect();
        let c2: Vec<f64> = self.all_maps().zip(&x).map(|(m, &xi)| m.d2(xi)).collect();
        let k = x.len();
        let grad = DVector::from_fn(k, |i, _| base.grad[i] * c[i]);
        let mut hess = DMatrix::from_fn(k, k, |i, j| base.hess[(i, j)] * c[i] * c[j]);
        for i in 0..k {
            hess[(i, i)] += base.grad[i] * c2[i];
        }
        Derivatives {
            value: base.value,
            grad,
            hess,
        }
    }

    fn map_box(&self, maps: &[ScaleMap], b: BoxDomain) -> BoxDomain {
        let axes = maps
            .iter()
            .zip(b.axes)
            .map(|(m, a)| m.map_interval(a).expect("map validated at construction"))
            .collect();
        BoxDomain { axes }
    }
}

impl JointModel for Transformed {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn theta_dim(&self) -> usize {
        self.base.theta_dim()
    }

    fn v_dim(&self) -> usize {
        self.base.v_dim()
    }

    fn log_cond(&self, theta: &[f64], v: &[f64], y: &ObservedData) -> f64 {
        self.base.log_cond(&self.theta_base(theta), &self.v_base(v), y)
    }

    fn log_marg_v(&self, theta: &[f64], v: &[f64]) -> f64 {
        let jac: f64 = self.v_maps.iter().zip(v).map(|(m, &x)| m.log_jacobian(x).0).sum();
        self.base.log_marg_v(&self.theta_base(theta), &self.v_base(v)) + jac
    }

    fn support_v(&self, theta: &[f64]) -> BoxDomain {
        self.map_box(&self.v_maps, self.base.support_v(&self.theta_base(theta)))
    }

    fn support_theta(&self) -> BoxDomain {
        self.map_box(&self.theta_maps, self.base.support_theta())
    }

    fn theta_range(&self) -> BoxDomain {
        self.map_box(&self.theta_maps, self.base.theta_range())
    }

    fn support_v_depends_on_theta(&self) -> bool {
        self.base.support_v_depends_on_theta()
    }

    fn theta_scale_labels(&self) -> Vec<ScaleLabel> {
        self.theta_maps.iter().map(|m| m.label()).collect()
    }

    fn v_scale_label(&self) -> ScaleLabel {
        match self.v_maps.first() {
            Some(ScaleMap::Identity) | None => self.base.v_scale_label(),
            Some(m) => m.label(),
        }
    }

    fn validate_data(&self, y: &ObservedData) -> Result<()> {
        self.base.validate_data(y)
    }

    fn log_cond_derivs(&self, theta: &[f64], v: &[f64], y: &ObservedData) -> Option<Derivatives> {
        let b = self.base.log_cond_derivs(&self.theta_base(theta), &self.v_base(v), y)?;
        Some(self.chain(b, theta, v))
    }

    fn log_marg_v_derivs(&self, theta: &[f64], v: &[f64]) -> Option<Derivatives> {
        let b = self.base.log_marg_v_derivs(&self.theta_base(theta), &self.v_base(v))?;
        let mut d = self.chain(b, theta, v);
        let p = self.theta_dim();
        for (k, (m, &x)) in self.v_maps.iter().zip(v).enumerate() {
            let (lj, lj1, lj2) = m.log_jacobian(x);
            d.value += lj;
            d.grad[p + k] += lj1;
            d.hess[(p + k, p + k)] += lj2;
        }
        Some(d)
    }

    fn sample_v(&self, theta: &[f64], rng: &mut McRng) -> Vec<f64> {
        let u = self.base.sample_v(&self.theta_base(theta), rng);
        self.v_maps.iter().zip(u).map(|(m, x)| m.from_base(x)).collect()
    }

    fn sample_y(&self, theta: &[f64], v: &[f64], n: usize, rng: &mut McRng) -> Vec<f64> {
        self.base.sample_y(&self.theta_base(theta), &self.v_base(v), n, rng)
    }

    fn initial_guess(&self, y: &ObservedData) -> (Vec<f64>, Vec<f64>) {
        let (t, u) = self.base.initial_guess(y);
        (
            self.theta_maps.iter().zip(t).map(|(m, x)| m.from_base(x)).collect(),
            self.v_maps.iter().zip(u).map(|(m, x)| m.from_base(x)).collect(),
        )
    }

    fn theta_to_natural(&self, theta: &[f64]) -> Vec<f64> {
        self.base.theta_to_natural(&self.theta_base(theta))
    }

    fn v_to_base(&self, v: &[f64]) -> Vec<f64> {
        self.base.v_to_base(&self.v_base(v))
    }

    fn v_to_base_derivative(&self, v: &[f64]) -> Vec<f64> {
        let inner = self.v_base(v);
        let outer = self.base.v_to_base_derivative(&inner);
        self.v_maps
            .iter()
            .zip(v)
            .zip(outer)
            .map(|((m, &x), o)| o * m.d1(x))
            .collect()
    }

    fn oracles(&self) -> Oracles {
        self.oracles.clone()
    }
}

/// Convenience: wrap and share.
pub fn transformed_unobservable(base: ModelRef, map: ScaleMap) -> Result<ModelRef> {
    Ok(Arc::new(Transformed::unobservable(base, map)?))
}
