//! Joint maximisation of h over (θ, v) and the quantities built from it.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::optimize::{maximize, Evaluation, NewtonSettings, OptimStatus, Problem};
use crate::error::{HlikError, Result};
use crate::model::{
    check_support, h_derivatives, JointModel, ObservedData, ParameterVector, UnobservableVector,
};
use crate::numeric::{map_replicates, McEstimate, RngStream};

pub type RowMatrix = Vec<Vec<f64>>;

pub fn to_rows(m: &DMatrix<f64>) -> RowMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn from_rows(rows: &RowMatrix) -> DMatrix<f64> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(r, c, |i, j| rows[i][j])
}

/// Outcome of the joint maximisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MhleStatus {
    Converged,
    Diverged,
    NoInteriorMode,
    HessianNotPD,
    MaxIterations,
}

impl From<OptimStatus> for MhleStatus {
    fn from(s: OptimStatus) -> Self {
        match s {
            OptimStatus::Converged => MhleStatus::Converged,
            OptimStatus::Diverged => MhleStatus::Diverged,
            OptimStatus::NoInteriorMode => MhleStatus::NoInteriorMode,
            OptimStatus::HessianNotPD => MhleStatus::HessianNotPD,
            OptimStatus::MaxIterations => MhleStatus::MaxIterations,
        }
    }
}

/// Where the expected Hessian was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InfoPoint {
    Estimate,
    TrueTheta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MhleSolution {
    pub model: String,
    pub status: MhleStatus,
    pub message: String,
    pub iterations: usize,
    pub theta: ParameterVector,
    pub v: UnobservableVector,
    pub h_value: f64,
    pub score_at_solution: Vec<f64>,
    /// −∂²h/∂φ² at the solution.
    pub observed_hessian: RowMatrix,
    /// E_θ[−∂²h/∂φ²] at θ̂, when the model has a closed form.
    pub expected_hessian: Option<RowMatrix>,
    pub expected_positive_definite: Option<bool>,
    pub inverse_expected: Option<RowMatrix>,
    pub info_evaluated_at: InfoPoint,
}

impl MhleSolution {
    pub fn is_converged(&self) -> bool {
        self.status == MhleStatus::Converged
    }

    /// φ̂ = (θ̂, v̂).
    pub fn phi(&self) -> Vec<f64> {
        self.theta.values.iter().chain(&self.v.values).copied().collect()
    }

    /// Convert a non-converged status into the matching error.
    pub fn into_result(self) -> Result<Self> {
        match self.status {
            MhleStatus::Converged => Ok(self),
            MhleStatus::Diverged => Err(HlikError::NoInteriorMode(format!("diverged: {}", self.message))),
            MhleStatus::NoInteriorMode => Err(HlikError::NoInteriorMode(self.message)),
            MhleStatus::HessianNotPD => Err(HlikError::HessianNotNegDef),
            MhleStatus::MaxIterations => Err(HlikError::MaxIterations(self.iterations)),
        }
    }
}

/// Maximise h jointly over (θ, v) by safeguarded Newton.
///
/// Without `init`, starts from the model's method-of-moments guess.
pub fn solve_mhle(m: &dyn JointModel, y: &ObservedData, init: Option<(&[f64], &[f64])>) -> Result<MhleSolution> {
    m.validate_data(y)?;
    let p = m.theta_dim();
    let (t0, v0) = match init {
        Some((t, v)) => (t.to_vec(), v.to_vec()),
        None => m.initial_guess(y),
    };
    check_support(m, &t0, &v0)?;
    let objective = |phi: &[f64]| -> Result<Evaluation> {
        let d = h_derivatives(m, &phi[..p], &phi[p..], y)?;
        Ok(Evaluation {
            value: d.value,
            grad: d.grad,
            hess: d.hess,
        })
    };
    let to_natural = |t: &[f64]| m.theta_to_natural(t);
    let mut axes = m.support_theta().axes;
    axes.extend(m.support_v(&t0).axes);
    if m.support_v_depends_on_theta() {
        return Err(HlikError::Unsupported(
            "joint maximisation over a θ-dependent support".into(),
        ));
    }
    let problem = Problem {
        objective: &objective,
        bounds: crate::numeric::BoxDomain { axes },
        theta_count: p,
        to_natural: &to_natural,
    };
    let x0: Vec<f64> = t0.iter().chain(&v0).copied().collect();
    let out = maximize(&problem, &x0, &NewtonSettings::default())?;
    let status = MhleStatus::from(out.status);
    let theta = out.x[..p].to_vec();
    let v = out.x[p..].to_vec();
    let observed = -&out.eval.hess;

    let (expected, pd, inverse) = match (status, m.oracles().expected_hessian) {
        (MhleStatus::Converged, Some(eh)) => {
            let e = eh(&theta, y.n());
            let inv = inverse_information(&e);
            (Some(to_rows(&e)), Some(inv.positive_definite), inv.inverse)
        }
        _ => (None, None, None),
    };
    Ok(MhleSolution {
        model: m.name(),
        status,
        message: out.message,
        iterations: out.iterations,
        theta: ParameterVector {
            values: theta,
            scale_labels: m.theta_scale_labels(),
        },
        v: UnobservableVector {
            values: v,
            scale_label: m.v_scale_label(),
        },
        h_value: out.eval.value,
        score_at_solution: out.eval.grad.iter().copied().collect(),
        observed_hessian: to_rows(&observed),
        expected_hessian: expected,
        expected_positive_definite: pd,
        inverse_expected: inverse,
        info_evaluated_at: InfoPoint::Estimate,
    })
}

/// How to compute the expected Hessian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExpectedHessianMethod {
    ClosedForm,
    MonteCarlo { n_mc: usize, stream: RngStream },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedHessian {
    pub matrix: RowMatrix,
    /// Per-entry Monte Carlo standard errors.
    pub se: Option<RowMatrix>,
}

impl ExpectedHessian {
    pub fn matrix(&self) -> DMatrix<f64> {
        from_rows(&self.matrix)
    }
}

/// E_θ[−∂²h/∂φ²] for samples of size `n_obs`.
pub fn expected_hessian(
    m: &dyn JointModel,
    theta: &[f64],
    n_obs: usize,
    method: ExpectedHessianMethod,
) -> Result<ExpectedHessian> {
    if n_obs == 0 {
        return Err(HlikError::InvalidInput("sample size must be positive".into()));
    }
    match method {
        ExpectedHessianMethod::ClosedForm => {
            let eh = m.oracles().expected_hessian.ok_or_else(|| {
                HlikError::Unsupported(format!("{} has no closed-form expected Hessian", m.name()))
            })?;
            Ok(ExpectedHessian {
                matrix: to_rows(&eh(theta, n_obs)),
                se: None,
            })
        }
        ExpectedHessianMethod::MonteCarlo { n_mc, stream } => {
            if n_mc < 2 {
                return Err(HlikError::InvalidInput("Monte Carlo needs at least two draws".into()));
            }
            let k = m.theta_dim() + m.v_dim();
            let draws: Vec<Result<Vec<f64>>> = map_replicates(n_mc, stream, |_, rng| {
                let v = m.sample_v(theta, rng);
                let y = ObservedData::new(m.sample_y(theta, &v, n_obs, rng))?;
                let d = h_derivatives(m, theta, &v, &y)?;
                Ok((-d.hess).iter().copied().collect())
            });
            let draws: Vec<Vec<f64>> = draws.into_iter().collect::<Result<_>>()?;
            let mut mean = DMatrix::zeros(k, k);
            let mut se = DMatrix::zeros(k, k);
            for idx in 0..k * k {
                let col: Vec<f64> = draws.iter().map(|d| d[idx]).collect();
                let est = McEstimate::from_values(&col)?;
                // column-major flattening
                let (i, j) = (idx % k, idx / k);
                mean[(i, j)] = est.mean;
                se[(i, j)] = est.se;
            }
            Ok(ExpectedHessian {
                matrix: to_rows(&mean),
                se: Some(to_rows(&se)),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseInformation {
    pub positive_definite: bool,
    pub inverse: Option<RowMatrix>,
}

/// Inverse of a symmetric information matrix, only when it is positive definite.
pub fn inverse_information(info: &DMatrix<f64>) -> InverseInformation {
    match Cholesky::new(info.clone()) {
        Some(ch) => {
            let inv = ch.inverse();
            let sym = (&inv + inv.transpose()) * 0.5;
            InverseInformation {
                positive_definite: true,
                inverse: Some(to_rows(&sym)),
            }
        }
        None => InverseInformation {
            positive_definite: false,
            inverse: None,
        },
    }
}

/// ‖I_obs − I(θ̂)‖_∞ (largest absolute entry).
pub fn observed_vs_expected(m: &dyn JointModel, y: &ObservedData, sol: &MhleSolution) -> Result<f64> {
    let expected = match &sol.expected_hessian {
        Some(e) => from_rows(e),
        None => expected_hessian(m, &sol.theta.values, y.n(), ExpectedHessianMethod::ClosedForm)?.matrix(),
    };
    let observed = from_rows(&sol.observed_hessian);
    Ok((observed - expected).amax())
}

/// φ̂ − φ = T + R with T = I_h^{-1}(θ)·S(φ; y).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RTerm {
    pub leading: Vec<f64>,
    pub remainder: Vec<f64>,
    pub info_evaluated_at: InfoPoint,
}

/// Split the estimation error at the true (θ, v) into its linear term and remainder.
/// Only meaningful inside simulations, where the truth is known.
pub fn r_term_decomposition(
    m: &dyn JointModel,
    y: &ObservedData,
    true_theta: &[f64],
    true_v: &[f64],
    sol: &MhleSolution,
) -> Result<RTerm> {
    let info = expected_hessian(m, true_theta, y.n(), ExpectedHessianMethod::ClosedForm)?.matrix();
    let inv = inverse_information(&info);
    let inv = from_rows(inv.inverse.as_ref().ok_or_else(|| {
        HlikError::NotApplicable("expected Hessian is not positive definite".into())
    })?);
    let score = h_derivatives(m, true_theta, true_v, y)?.grad;
    let leading: DVector<f64> = inv * score;
    let truth: Vec<f64> = true_theta.iter().chain(true_v).copied().collect();
    let remainder = sol
        .phi()
        .iter()
        .zip(&truth)
        .zip(leading.iter())
        .map(|((est, tru), t)| (est - tru) - t)
        .collect();
    Ok(RTerm {
        leading: leading.iter().copied().collect(),
        remainder,
        info_evaluated_at: InfoPoint::TrueTheta,
    })
}
