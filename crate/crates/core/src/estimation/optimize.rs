//! Safeguarded Newton ascent on a box.
//!
//! Steps come from the Cholesky factor of the negated Hessian, shifted towards a
//! multiple of the identity when it is not positive definite. Each step is cut back
//! to stay strictly inside the box and then halved until the Armijo condition holds.
//! Runs that walk into a face of the box with an outward gradient, or off to
//! infinity, end with a typed status instead of an error.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{HlikError, Result};
use crate::numeric::BoxDomain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptimStatus {
    Converged,
    Diverged,
    NoInteriorMode,
    HessianNotPD,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonSettings {
    pub grad_tol: f64,
    pub step_tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    pub divergence_limit: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            step_tol: 1e-10,
            max_iter: 500,
            max_halvings: 40,
            divergence_limit: 1e12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimOutcome {
    pub x: Vec<f64>,
    pub eval: Evaluation,
    pub status: OptimStatus,
    pub iterations: usize,
    pub message: String,
}

/// Problem description for [`maximize`]. The first `theta_count` coordinates are
/// parameters (divergence is judged on `to_natural` of them); the rest are
/// unobservables (running off to infinity means there is no interior mode).
pub struct Problem<'a> {
    pub objective: &'a dyn Fn(&[f64]) -> Result<Evaluation>,
    pub bounds: BoxDomain,
    pub theta_count: usize,
    pub to_natural: &'a dyn Fn(&[f64]) -> Vec<f64>,
}

fn ascent_direction(eval: &Evaluation) -> (DVector<f64>, bool) {
    let neg = -&eval.hess;
    if let Some(ch) = Cholesky::new(neg.clone()) {
        return (ch.solve(&eval.grad), true);
    }
    let k = neg.nrows();
    let scale = neg.iter().fold(0.0_f64, |a, b| a.max(b.abs())).max(1e-12);
    let mut tau = 1e-8 * scale;
    for _ in 0..60 {
        let shifted = &neg + DMatrix::identity(k, k) * tau;
        if let Some(ch) = Cholesky::new(shifted) {
            return (ch.solve(&eval.grad), false);
        }
        tau *= 10.0;
    }
    (eval.grad.clone(), false)
}

fn is_negative_definite(h: &DMatrix<f64>) -> bool {
    Cholesky::new(-h).is_some()
}

/// Largest step fraction keeping `x + α d` strictly inside the box.
fn fraction_to_boundary(x: &[f64], d: &DVector<f64>, bounds: &BoxDomain) -> f64 {
    let mut alpha: f64 = 1.0;
    for (i, axis) in bounds.axes.iter().enumerate() {
        let di = d[i];
        if di < 0.0 && axis.lower.is_finite() {
            alpha = alpha.min(0.99 * (axis.lower - x[i]) / di);
        } else if di > 0.0 && axis.upper.is_finite() {
            alpha = alpha.min(0.99 * (axis.upper - x[i]) / di);
        }
    }
    alpha.max(0.0)
}

/// Index of a coordinate pinned against a finite face with an outward gradient.
fn pinned_to_face(x: &[f64], g: &DVector<f64>, bounds: &BoxDomain, rel: f64, grad_tol: f64) -> Option<usize> {
    bounds.axes.iter().enumerate().position(|(i, axis)| {
        let near_lower = axis.lower.is_finite()
            && x[i] - axis.lower <= rel * axis.lower.abs().max(1.0)
            && g[i] < -grad_tol;
        let near_upper = axis.upper.is_finite()
            && axis.upper - x[i] <= rel * axis.upper.abs().max(1.0)
            && g[i] > grad_tol;
        near_lower || near_upper
    })
}

fn outcome(x: Vec<f64>, eval: Evaluation, status: OptimStatus, iterations: usize, message: impl Into<String>) -> OptimOutcome {
    OptimOutcome {
        x,
        eval,
        status,
        iterations,
        message: message.into(),
    }
}

pub fn maximize(problem: &Problem<'_>, x0: &[f64], settings: &NewtonSettings) -> Result<OptimOutcome> {
    if !problem.bounds.contains_interior(x0) {
        return Err(HlikError::OutOfSupport(format!(
            "starting point {x0:?} is not interior to {:?}",
            problem.bounds.axes
        )));
    }
    let mut x = x0.to_vec();
    let mut eval = (problem.objective)(&x)?;
    let mut last_step = f64::INFINITY;
    for iter in 0..settings.max_iter {
        let theta_nat = (problem.to_natural)(&x[..problem.theta_count]);
        if theta_nat.iter().any(|t| !t.is_finite() || t.abs() > settings.divergence_limit) {
            return Ok(outcome(x, eval, OptimStatus::Diverged, iter, "parameter ran off to infinity"));
        }
        if x[problem.theta_count..].iter().any(|v| v.abs() > settings.divergence_limit) {
            return Ok(outcome(x, eval, OptimStatus::NoInteriorMode, iter, "unobservable ran off to infinity"));
        }
        if eval.value > 1e300 {
            return Ok(outcome(x, eval, OptimStatus::Diverged, iter, "objective unbounded"));
        }

        let gnorm = eval.grad.amax();
        let (dir, pd) = ascent_direction(&eval);
        let xscale = x.iter().fold(1.0_f64, |a, b| a.max(b.abs()));
        let newton_small = dir.amax() <= settings.step_tol * xscale;
        if gnorm < settings.grad_tol && (newton_small || last_step <= settings.step_tol * xscale || gnorm == 0.0) {
            let status = if pd { OptimStatus::Converged } else { OptimStatus::HessianNotPD };
            return Ok(outcome(x, eval, status, iter, "score equation solved"));
        }
        if let Some(i) = pinned_to_face(&x, &eval.grad, &problem.bounds, 1e-9, settings.grad_tol) {
            return Ok(outcome(
                x,
                eval,
                OptimStatus::NoInteriorMode,
                iter,
                format!("coordinate {i} pinned to a face of the support with non-vanishing score"),
            ));
        }

        let alpha_max = fraction_to_boundary(&x, &dir, &problem.bounds);
        let slope = eval.grad.dot(&dir);
        let mut alpha = alpha_max;
        let mut accepted = None;
        for _ in 0..=settings.max_halvings {
            let trial: Vec<f64> = x.iter().zip(dir.iter()).map(|(a, b)| a + alpha * b).collect();
            if problem.bounds.contains_interior(&trial) {
                if let Ok(e) = (problem.objective)(&trial) {
                    if e.value.is_finite() && e.value >= eval.value + 1e-4 * alpha * slope {
                        accepted = Some((trial, e));
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((xn, en)) => {
                last_step = xn
                    .iter()
                    .zip(&x)
                    .fold(0.0_f64, |a, (p, q)| a.max((p - q).abs()));
                x = xn;
                eval = en;
            }
            None => {
                if gnorm < settings.grad_tol {
                    let status = if is_negative_definite(&eval.hess) {
                        OptimStatus::Converged
                    } else {
                        OptimStatus::HessianNotPD
                    };
                    return Ok(outcome(x, eval, status, iter, "line search at roundoff floor"));
                }
                if let Some(i) = pinned_to_face(&x, &eval.grad, &problem.bounds, 1e-6, settings.grad_tol) {
                    return Ok(outcome(
                        x,
                        eval,
                        OptimStatus::NoInteriorMode,
                        iter,
                        format!("coordinate {i} pinned to a face of the support"),
                    ));
                }
                return Ok(outcome(x, eval, OptimStatus::MaxIterations, iter, "line search failed"));
            }
        }
    }
    if let Some(i) = pinned_to_face(&x, &eval.grad, &problem.bounds, 1e-6, settings.grad_tol) {
        return Ok(outcome(
            x,
            eval,
            OptimStatus::NoInteriorMode,
            settings.max_iter,
            format!("coordinate {i} pinned to a face of the support"),
        ));
    }
    Ok(outcome(x, eval, OptimStatus::MaxIterations, settings.max_iter, "iteration limit"))
}
