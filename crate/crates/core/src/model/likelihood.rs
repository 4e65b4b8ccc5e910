//! h-loglikelihood, marginal likelihood by quadrature, and its Laplace approximation.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix};

use super::data::ObservedData;
use super::joint::{check_support, h_derivatives, h_raw, JointModel};
use crate::error::{HlikError, Result};
use crate::estimation::optimize::{maximize, Evaluation, NewtonSettings, OptimStatus, Problem};
use crate::numeric::{integrate, integrate_1d_scaled, QuadratureSpec};

/// h(θ, v; y) = log f_θ(y | v) + log f_θ(v).
pub fn h_loglik(m: &dyn JointModel, y: &ObservedData, theta: &[f64], v: &[f64]) -> Result<f64> {
    m.validate_data(y)?;
    check_support(m, theta, v)?;
    let h = h_raw(m, theta, v, y);
    if h.is_finite() {
        Ok(h)
    } else {
        Err(HlikError::NonFinite(format!("h = {h} at θ={theta:?}, v={v:?}")))
    }
}

/// Mode of v ↦ h(θ, v; y) with the v-block of the Hessian there.
#[derive(Debug, Clone)]
pub struct ConditionalMode {
    pub v: Vec<f64>,
    pub h: f64,
    pub hess_vv: DMatrix<f64>,
}

/// Maximise h over v at fixed θ.
pub fn conditional_mode(m: &dyn JointModel, y: &ObservedData, theta: &[f64], v0: Option<&[f64]>) -> Result<ConditionalMode> {
    let p = m.theta_dim();
    let d = m.v_dim();
    let objective = |v: &[f64]| -> Result<Evaluation> {
        let full = h_derivatives(m, theta, v, y)?;
        Ok(Evaluation {
            value: full.value,
            grad: full.grad.rows(p, d).into_owned(),
            hess: full.hess.view((p, p), (d, d)).into_owned(),
        })
    };
    let none = |_: &[f64]| Vec::new();
    let problem = Problem {
        objective: &objective,
        bounds: m.support_v(theta),
        theta_count: 0,
        to_natural: &none,
    };
    let start = match v0 {
        Some(v) => v.to_vec(),
        None => m.initial_guess(y).1,
    };
    let out = maximize(&problem, &start, &NewtonSettings::default())?;
    match out.status {
        OptimStatus::Converged => Ok(ConditionalMode {
            v: out.x,
            h: out.eval.value,
            hess_vv: out.eval.hess,
        }),
        OptimStatus::NoInteriorMode | OptimStatus::Diverged => Err(HlikError::NoInteriorMode(out.message)),
        OptimStatus::HessianNotPD => Err(HlikError::HessianNotNegDef),
        OptimStatus::MaxIterations => Err(HlikError::MaxIterations(out.iterations)),
    }
}

/// log ∫ e^{h(θ, v; y)} dv over Ω_v, shifted by the conditional mode when one exists.
pub fn marginal_loglik(m: &dyn JointModel, y: &ObservedData, theta: &[f64], spec: &QuadratureSpec) -> Result<f64> {
    m.validate_data(y)?;
    let support = m.support_v(theta);
    let (shift, center, scale) = match conditional_mode(m, y, theta, None) {
        Ok(mode) => {
            let curv = -mode.hess_vv[(0, 0)];
            (mode.h, mode.v[0], if curv > 0.0 { curv.sqrt().recip() } else { 1.0 })
        }
        Err(_) => {
            let (_, v0) = m.initial_guess(y);
            let probe = if support.contains_interior(&v0) {
                v0
            } else {
                support.axes.iter().map(|a| a.center()).collect()
            };
            (h_raw(m, theta, &probe, y), probe[0], 1.0)
        }
    };
    if !shift.is_finite() {
        return Err(HlikError::NonFinite("h at the reference point".into()));
    }
    let integral = if m.v_dim() == 1 {
        integrate_1d_scaled(
            |v| Ok((h_raw(m, theta, &[v], y) - shift).exp()),
            support.axes[0],
            center,
            scale,
            spec,
        )?
    } else {
        integrate(|v| Ok((h_raw(m, theta, v, y) - shift).exp()), &support, spec)?
    };
    if !(integral.value > 0.0) {
        return Err(HlikError::NonFinite(format!("marginal integral {}", integral.value)));
    }
    Ok(integral.value.ln() + shift)
}

/// h(θ, ṽ_θ) − ½ log det(−∂²h/∂v²) + (d/2) log 2π.
pub fn laplace_marginal(m: &dyn JointModel, y: &ObservedData, theta: &[f64]) -> Result<f64> {
    m.validate_data(y)?;
    let mode = conditional_mode(m, y, theta, None)?;
    let neg = -&mode.hess_vv;
    let chol = Cholesky::new(neg).ok_or(HlikError::HessianNotNegDef)?;
    let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|x| x.ln()).sum::<f64>();
    let d = m.v_dim() as f64;
    Ok(mode.h - 0.5 * log_det + 0.5 * d * (2.0 * PI).ln())
}
