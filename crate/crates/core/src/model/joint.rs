use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;

use super::data::{ObservedData, ScaleLabel};
use crate::error::{HlikError, Result};
use crate::numeric::{self, BoxDomain};
use crate::prediction::closed_form::{FlatPrior, RatioPareto};

pub type McRng = ChaCha8Rng;

/// Value, gradient and Hessian of a scalar function of φ = (θ, v).
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

impl Derivatives {
    pub fn zeros(dim: usize) -> Self {
        Self {
            value: 0.0,
            grad: DVector::zeros(dim),
            hess: DMatrix::zeros(dim, dim),
        }
    }

    pub fn add(mut self, other: &Derivatives) -> Self {
        self.value += other.value;
        self.grad += &other.grad;
        self.hess += &other.hess;
        self
    }
}

type Shared<F> = Option<Arc<F>>;

/// Closed-form results a model may supply. Used both as fast paths and as
/// independent oracles in tests.
#[derive(Clone, Default)]
pub struct Oracles {
    /// Exact joint maximiser (θ̂, v̂) of h.
    pub exact_mhle: Shared<dyn Fn(&ObservedData) -> Option<(Vec<f64>, Vec<f64>)> + Send + Sync>,
    /// E_θ[−∂²h/∂φ²] for a sample of size n.
    pub expected_hessian: Shared<dyn Fn(&[f64], usize) -> DMatrix<f64> + Send + Sync>,
    /// argmax_θ h(θ, v; y).
    pub profile_theta: Shared<dyn Fn(&ObservedData, &[f64]) -> Vec<f64> + Send + Sync>,
    /// log f_θ(y).
    pub marginal_loglik: Shared<dyn Fn(&[f64], &ObservedData) -> f64 + Send + Sync>,
    /// Multiplier k in r = k·u, u being the unobservable on its original scale.
    pub ratio_scale: Shared<dyn Fn(&ObservedData) -> f64 + Send + Sync>,
    /// Exact sampling law of the pivot r.
    pub pivotal: Shared<dyn Fn(&ObservedData) -> RatioPareto + Send + Sync>,
    /// Flat-prior posterior predictive law of r.
    pub posterior_flat: Shared<dyn Fn(&ObservedData, FlatPrior) -> Result<RatioPareto> + Send + Sync>,
}

impl fmt::Debug for Oracles {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Oracles")
            .field("exact_mhle", &self.exact_mhle.is_some())
            .field("expected_hessian", &self.expected_hessian.is_some())
            .field("profile_theta", &self.profile_theta.is_some())
            .field("marginal_loglik", &self.marginal_loglik.is_some())
            .field("ratio_scale", &self.ratio_scale.is_some())
            .field("pivotal", &self.pivotal.is_some())
            .field("posterior_flat", &self.posterior_flat.is_some())
            .finish()
    }
}

/// Joint model f_θ(y, v) = f_θ(y | v) · f_θ(v).
///
/// Coordinates are always in the model's working parameterization. Analytic
/// derivatives are optional; every consumer falls back to finite differences.
pub trait JointModel: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    fn theta_dim(&self) -> usize;
    fn v_dim(&self) -> usize;

    /// log f_θ(y | v).
    fn log_cond(&self, theta: &[f64], v: &[f64], y: &ObservedData) -> f64;
    /// log f_θ(v).
    fn log_marg_v(&self, theta: &[f64], v: &[f64]) -> f64;

    fn support_v(&self, theta: &[f64]) -> BoxDomain;
    fn support_theta(&self) -> BoxDomain;

    /// Finite θ box used for audits and grids.
    fn theta_range(&self) -> BoxDomain;

    fn support_v_depends_on_theta(&self) -> bool {
        false
    }

    fn theta_scale_labels(&self) -> Vec<ScaleLabel> {
        vec![ScaleLabel::Natural; self.theta_dim()]
    }

    fn v_scale_label(&self) -> ScaleLabel {
        ScaleLabel::Natural
    }

    /// Reject data outside the model's sample space.
    fn validate_data(&self, _y: &ObservedData) -> Result<()> {
        Ok(())
    }

    /// Derivatives of log f_θ(y | v) over φ = (θ, v).
    fn log_cond_derivs(&self, _theta: &[f64], _v: &[f64], _y: &ObservedData) -> Option<Derivatives> {
        None
    }

    /// Derivatives of log f_θ(v) over φ = (θ, v).
    fn log_marg_v_derivs(&self, _theta: &[f64], _v: &[f64]) -> Option<Derivatives> {
        None
    }

    fn sample_v(&self, theta: &[f64], rng: &mut McRng) -> Vec<f64>;

    /// Draw n observations from f_θ(y | v).
    fn sample_y(&self, theta: &[f64], v: &[f64], n: usize, rng: &mut McRng) -> Vec<f64>;

    /// Method-of-moments θ₀ and v₀ at its conditional mean given θ₀.
    fn initial_guess(&self, y: &ObservedData) -> (Vec<f64>, Vec<f64>);

    /// θ on its natural scale, used for divergence detection.
    fn theta_to_natural(&self, theta: &[f64]) -> Vec<f64> {
        theta.to_vec()
    }

    /// v mapped to the unobservable's original scale.
    fn v_to_base(&self, v: &[f64]) -> Vec<f64> {
        v.to_vec()
    }

    /// d(base u)/dv per coordinate.
    fn v_to_base_derivative(&self, v: &[f64]) -> Vec<f64> {
        vec![1.0; v.len()]
    }

    fn oracles(&self) -> Oracles {
        Oracles::default()
    }
}

pub type ModelRef = Arc<dyn JointModel>;

/// h(θ, v; y) without support checks.
pub fn h_raw(m: &dyn JointModel, theta: &[f64], v: &[f64], y: &ObservedData) -> f64 {
    m.log_cond(theta, v, y) + m.log_marg_v(theta, v)
}

fn split(m: &dyn JointModel, phi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let p = m.theta_dim();
    (phi[..p].to_vec(), phi[p..].to_vec())
}

fn fd_derivatives<F>(f: F, phi: &[f64]) -> Result<Derivatives>
where
    F: Fn(&[f64]) -> f64,
{
    let value = f(phi);
    if !value.is_finite() {
        return Err(HlikError::NonFinite(format!("function value {value} at {phi:?}")));
    }
    let grad = numeric::gradient(&f, phi, None)?;
    let hess = numeric::hessian(&f, phi, None)?;
    Ok(Derivatives {
        value,
        grad: DVector::from_vec(grad),
        hess,
    })
}

/// Derivatives of h over φ = (θ, v): analytic when the model provides both pieces,
/// finite differences otherwise.
pub fn h_derivatives(m: &dyn JointModel, theta: &[f64], v: &[f64], y: &ObservedData) -> Result<Derivatives> {
    if let (Some(c), Some(g)) = (m.log_cond_derivs(theta, v, y), m.log_marg_v_derivs(theta, v)) {
        let d = c.add(&g);
        if !d.value.is_finite() || d.grad.iter().any(|x| !x.is_finite()) || d.hess.iter().any(|x| !x.is_finite()) {
            return Err(HlikError::NonFinite(format!("h derivatives at θ={theta:?}, v={v:?}")));
        }
        return Ok(d);
    }
    let phi: Vec<f64> = theta.iter().chain(v).copied().collect();
    fd_derivatives(
        |x| {
            let (t, w) = split(m, x);
            h_raw(m, &t, &w, y)
        },
        &phi,
    )
}

/// Derivatives of log f_θ(v) over φ = (θ, v).
pub fn log_marg_derivatives(m: &dyn JointModel, theta: &[f64], v: &[f64]) -> Result<Derivatives> {
    if let Some(d) = m.log_marg_v_derivs(theta, v) {
        return Ok(d);
    }
    let phi: Vec<f64> = theta.iter().chain(v).copied().collect();
    fd_derivatives(
        |x| {
            let (t, w) = split(m, x);
            m.log_marg_v(&t, &w)
        },
        &phi,
    )
}

/// Check θ and v against the supports.
pub fn check_support(m: &dyn JointModel, theta: &[f64], v: &[f64]) -> Result<()> {
    if theta.len() != m.theta_dim() || v.len() != m.v_dim() {
        return Err(HlikError::InvalidInput(format!(
            "expected θ of length {} and v of length {}",
            m.theta_dim(),
            m.v_dim()
        )));
    }
    let ts = m.support_theta();
    if !ts.contains_interior(theta) {
        return Err(HlikError::OutOfSupport(format!("θ = {theta:?} outside {:?}", ts.axes)));
    }
    let vs = m.support_v(theta);
    let inside = vs.axes.iter().zip(v).all(|(a, &x)| a.contains(x) && x.is_finite());
    if !inside {
        return Err(HlikError::OutOfSupport(format!("v = {v:?} outside {:?}", vs.axes)));
    }
    Ok(())
}
