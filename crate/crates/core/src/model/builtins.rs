//! Built-in joint models with closed-form oracles.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use super::data::ObservedData;
use super::joint::{Derivatives, JointModel, McRng, ModelRef, Oracles};
use super::transform::{ScaleMap, Transformed};
use crate::error::{HlikError, Result};
use crate::numeric::{BoxDomain, Interval};
use crate::prediction::closed_form::{FlatPrior, RatioPareto};

fn derivs2(value: f64, g: [f64; 2], h: [[f64; 2]; 2]) -> Derivatives {
    Derivatives {
        value,
        grad: DVector::from_vec(g.to_vec()),
        hess: DMatrix::from_row_slice(2, 2, &[h[0][0], h[0][1], h[1][0], h[1][1]]),
    }
}

fn positive_data(y: &ObservedData) -> Result<()> {
    if y.min() <= 0.0 {
        return Err(HlikError::InvalidInput(
            "exponential data must be strictly positive".into(),
        ));
    }
    Ok(())
}

/// Scale of the unobservable future observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnobservableScale {
    /// u = y_{n+1}
    NaturalU,
    /// v = log y_{n+1}
    LogU,
}

/// Working scale of the exponential mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamScale {
    Lambda,
    LogLambda,
}

impl ParamScale {
    pub fn map(self) -> ScaleMap {
        match self {
            ParamScale::Lambda => ScaleMap::Identity,
            ParamScale::LogLambda => ScaleMap::Log,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ParamScale::Lambda => "lambda",
            ParamScale::LogLambda => "log-lambda",
        }
    }
}

/// y_1..y_n i.i.d. exponential with mean λ; the unobservable is u = y_{n+1}.
/// Coordinates: θ = (λ), v = (u).
#[derive(Debug, Clone, Copy, Default)]
pub struct ExponentialFuture;

impl JointModel for ExponentialFuture {
    fn name(&self) -> String {
        "exp-future".into()
    }
    fn theta_dim(&self) -> usize {
        1
    }
    fn v_dim(&self) -> usize {
        1
    }

    fn log_cond(&self, theta: &[f64], _v: &[f64], y: &ObservedData) -> f64 {
        let lambda = theta[0];
        let n = y.n() as f64;
        -n * lambda.ln() - y.sum() / lambda
    }

    fn log_marg_v(&self, theta: &[f64], v: &[f64]) -> f64 {
        let lambda = theta[0];
        -lambda.ln() - v[0] / lambda
    }

    fn support_v(&self, _theta: &[f64]) -> BoxDomain {
        BoxDomain::single(Interval::positive_half_line())
    }

    fn support_theta(&self) -> BoxDomain {
        BoxDomain::single(Interval::positive_half_line())
    }

    fn theta_range(&self) -> BoxDomain {
        BoxDomain::single(Interval { lower: 0.1, upper: 10.0 })
    }

    fn validate_data(&self, y: &ObservedData) -> Result<()> {
        positive_data(y)
    }

    fn log_cond_derivs(&self, theta: &[f64], v: &[f64], y: &ObservedData) -> Option<Derivatives> {
        let l = theta[0];
        let n = y.n() as f64;
        let s = y.sum();
        Some(derivs2(
            self.log_cond(theta, v, y),
            [-n / l + s / (l * l), 0.0],
            [[n / (l * l) - 2.0 * s / (l * l * l), 0.0], [0.0, 0.0]],
        ))
    }

    fn log_marg_v_derivs(&self, theta: &[f64], v: &[f64]) -> Option<Derivatives> {
        let l = theta[0];
        let u = v[0];
        Some(derivs2(
            self.log_marg_v(theta, v),
            [-1.0 / l + u / (l * l), -1.0 / l],
            [[1.0 / (l * l) - 2.0 * u / (l * l * l), 1.0 / (l * l)], [1.0 / (l * l), 0.0]],
        ))
    }

    fn sample_v(&self, theta: &[f64], rng: &mut McRng) -> Vec<f64> {
        let e = Exp::new(1.0 / theta[0]).expect("positive rate");
        vec![e.sample(rng)]
    }

    fn sample_y(&self, theta: &[f64], _v: &[f64], n: usize, rng: &mut McRng) -> Vec<f64> {
        let e = Exp::new(1.0 / theta[0]).expect("positive rate");
        (0..n).map(|_| e.sample(rng)).collect()
    }

    fn initial_guess(&self, y: &ObservedData) -> (Vec<f64>, Vec<f64>) {
        let lambda = y.mean();
        (vec![lambda], vec![lambda])
    }
}

fn exponential_oracles(scale: UnobservableScale, param: ParamScale) -> Oracles {
    let to_theta = move |lambda: f64| match param {
        ParamScale::Lambda => lambda,
        ParamScale::LogLambda => lambda.ln(),
    };
    let from_theta = move |t: f64| match param {
        ParamScale::Lambda => t,
        ParamScale::LogLambda => t.exp(),
    };
    let to_v = move |u: f64| match scale {
        UnobservableScale::NaturalU => u,
        UnobservableScale::LogU => u.ln(),
    };
    let from_v = move |v: f64| match scale {
        UnobservableScale::NaturalU => v,
        UnobservableScale::LogU => v.exp(),
    };
    Oracles {
        exact_mhle: Some(Arc::new(move |y: &ObservedData| match scale {
            UnobservableScale::NaturalU => None,
            UnobservableScale::LogU => Some((vec![to_theta(y.mean())], vec![to_v(y.mean())])),
        })),
        expected_hessian: Some(Arc::new(move |theta: &[f64], n: usize| {
            let l = from_theta(theta[0]);
            let n = n as f64;
            let m = match (scale, param) {
                (UnobservableScale::LogU, ParamScale::Lambda) => {
                    [(n + 1.0) / (l * l), -1.0 / l, -1.0 / l, 1.0]
                }
                (UnobservableScale::NaturalU, ParamScale::Lambda) => {
                    [(n + 1.0) / (l * l), -1.0 / (l * l), -1.0 / (l * l), 0.0]
                }
                (UnobservableScale::LogU, ParamScale::LogLambda) => [n + 1.0, -1.0, -1.0, 1.0],
                (UnobservableScale::NaturalU, ParamScale::LogLambda) => {
                    [n + 1.0, -1.0 / l, -1.0 / l, 0.0]
                }
            };
            DMatrix::from_row_slice(2, 2, &m)
        })),
        profile_theta: Some(Arc::new(move |y: &ObservedData, v: &[f64]| {
            let n = y.n() as f64;
            vec![to_theta((y.sum() + from_v(v[0])) / (n + 1.0))]
        })),
        marginal_loglik: Some(Arc::new(move |theta: &[f64], y: &ObservedData| {
            let l = from_theta(theta[0]);
            -(y.n() as f64) * l.ln() - y.sum() / l
        })),
        ratio_scale: Some(Arc::new(|y: &ObservedData| y.n() as f64 / y.sum())),
        pivotal: Some(Arc::new(|y: &ObservedData| RatioPareto::pivotal(y.n()))),
        posterior_flat: Some(Arc::new(|y: &ObservedData, prior: FlatPrior| {
            RatioPareto::posterior_flat(y.n(), prior)
        })),
    }
}

/// Exponential future-observation model on the requested scales.
pub fn exponential_future(scale: UnobservableScale, param: ParamScale) -> ModelRef {
    let v_map = match scale {
        UnobservableScale::NaturalU => ScaleMap::Identity,
        UnobservableScale::LogU => ScaleMap::Log,
    };
    let name = match (scale, param) {
        (UnobservableScale::NaturalU, ParamScale::Lambda) => "exp-future",
        (UnobservableScale::LogU, ParamScale::Lambda) => "exp-future-log",
        (UnobservableScale::NaturalU, ParamScale::LogLambda) => "exp-future[log-lambda]",
        (UnobservableScale::LogU, ParamScale::LogLambda) => "exp-future-log[log-lambda]",
    };
    let m = Transformed::new(Arc::new(ExponentialFuture), vec![param.map()], vec![v_map])
        .expect("exponential supports admit both maps")
        .with_oracles(exponential_oracles(scale, param))
        .with_name(name);
    Arc::new(m)
}

/// u exponential with rate θ (mean 1/θ); given u, y_i i.i.d. exponential with rate u.
/// Coordinates: θ = (rate), v = (u).
#[derive(Debug, Clone, Copy)]
pub struct BayarriMarginal {
    pub theta_domain: Interval,
}

impl Default for BayarriMarginal {
    fn default() -> Self {
        Self {
            theta_domain: Interval { lower: 0.1, upper: 10.0 },
        }
    }
}

impl JointModel for BayarriMarginal {
    fn name(&self) -> String {
        "bayarri".into()
    }
    fn theta_dim(&self) -> usize {
        1
    }
    fn v_dim(&self) -> usize {
        1
    }

    fn log_cond(&self, _theta: &[f64], v: &[f64], y: &ObservedData) -> f64 {
        let u = v[0];
        y.n() as f64 * u.ln() - u * y.sum()
    }

    fn log_marg_v(&self, theta: &[f64], v: &[f64]) -> f64 {
        theta[0].ln() - theta[0] * v[0]
    }

    fn support_v(&self, _theta: &[f64]) -> BoxDomain {
        BoxDomain::single(Interval::positive_half_line())
    }

    fn support_theta(&self) -> BoxDomain {
        BoxDomain::single(Interval::positive_half_line())
    }

    fn theta_range(&self) -> BoxDomain {
        BoxDomain::single(self.theta_domain)
    }

    fn validate_data(&self, y: &ObservedData) -> Result<()> {
        positive_data(y)
    }

    fn log_cond_derivs(&self, theta: &[f64], v: &[f64], y: &ObservedData) -> Option<Derivatives> {
        let u = v[0];
        let n = y.n() as f64;
        Some(derivs2(
            self.log_cond(theta, v, y),
            [0.0, n / u - y.sum()],
            [[0.0, 0.0], [0.0, -n / (u * u)]],
        ))
    }

    fn log_marg_v_derivs(&self, theta: &[f64], v: &[f64]) -> Option<Derivatives> {
        let t = theta[0];
        Some(derivs2(
            self.log_marg_v(theta, v),
            [1.0 / t - v[0], -t],
            [[-1.0 / (t * t), -1.0], [-1.0, 0.0]],
        ))
    }

    fn sample_v(&self, theta: &[f64], rng: &mut McRng) -> Vec<f64> {
        vec![Exp::new(theta[0]).expect("positive rate").sample(rng)]
    }

    fn sample_y(&self, _theta: &[f64], v: &[f64], n: usize, rng: &mut McRng) -> Vec<f64> {
        let e = Exp::new(v[0]).expect("positive rate");
        (0..n).map(|_| e.sample(rng)).collect()
    }

    fn initial_guess(&self, y: &ObservedData) -> (Vec<f64>, Vec<f64>) {
        // E[y | u] = 1/u; θ₀ = 1/u₀ puts u₀ at its conditional mean
        let u0 = 1.0 / y.mean();
        (vec![1.0 / u0], vec![u0])
    }
}

pub fn bayarri_marginal(theta_domain: Interval) -> ModelRef {
    Arc::new(BayarriMarginal { theta_domain })
}

pub fn bayarri_log(theta_domain: Interval) -> ModelRef {
    let m = Transformed::unobservable(bayarri_marginal(theta_domain), ScaleMap::Log)
        .expect("positive support")
        .with_name("bayarri-log");
    Arc::new(m)
}

/// y_1..y_n i.i.d. N(μ, σ²) with σ known; the unobservable is v = y_{n+1}.
/// Coordinates: θ = (μ), v = (v).
#[derive(Debug, Clone, Copy)]
pub struct NormalLocationFuture {
    pub sigma: f64,
}

impl NormalLocationFuture {
    fn log_norm(&self) -> f64 {
        -self.sigma.ln() - 0.5 * (2.0 * PI).ln()
    }
}

impl JointModel for NormalLocationFuture {
    fn name(&self) -> String {
        "normal-future".into()
    }
    fn theta_dim(&self) -> usize {
        1
    }
    fn v_dim(&self) -> usize {
        1
    }

    fn log_cond(&self, theta: &[f64], _v: &[f64], y: &ObservedData) -> f64 {
        let n = y.n() as f64;
        let dev = y.mean() - theta[0];
        let ss = y.sum_sq_dev() + n * dev * dev;
        n * self.log_norm() - ss / (2.0 * self.sigma * self.sigma)
    }

    fn log_marg_v(&self, theta: &[f64], v: &[f64]) -> f64 {
        let z = (v[0] - theta[0]) / self.sigma;
        self.log_norm() - 0.5 * z * z
    }

    fn support_v(&self, _theta: &[f64]) -> BoxDomain {
        BoxDomain::single(Interval::real_line())
    }

    fn support_theta(&self) -> BoxDomain {
        BoxDomain::single(Interval::real_line())
    }

    fn theta_range(&self) -> BoxDomain {
        BoxDomain::single(Interval { lower: -2.0, upper: 2.0 })
    }

    fn log_cond_derivs(&self, theta: &[f64], v: &[f64], y: &ObservedData) -> Option<Derivatives> {
        let s2 = self.sigma * self.sigma;
        let n = y.n() as f64;
        Some(derivs2(
            self.log_cond(theta, v, y),
            [n * (y.mean() - theta[0]) / s2, 0.0],
            [[-n / s2, 0.0], [0.0, 0.0]],
        ))
    }

    fn log_marg_v_derivs(&self, theta: &[f64], v: &[f64]) -> Option<Derivatives> {
        let s2 = self.sigma * self.sigma;
        let r = (v[0] - theta[0]) / s2;
        Some(derivs2(
            self.log_marg_v(theta, v),
            [r, -r],
            [[-1.0 / s2, 1.0 / s2], [1.0 / s2, -1.0 / s2]],
        ))
    }

    fn sample_v(&self, theta: &[f64], rng: &mut McRng) -> Vec<f64> {
        vec![Normal::new(theta[0], self.sigma).expect("valid sigma").sample(rng)]
    }

    fn sample_y(&self, theta: &[f64], _v: &[f64], n: usize, rng: &mut McRng) -> Vec<f64> {
        let d = Normal::new(theta[0], self.sigma).expect("valid sigma");
        (0..n).map(|_| d.sample(rng)).collect()
    }

    fn initial_guess(&self, y: &ObservedData) -> (Vec<f64>, Vec<f64>) {
        (vec![y.mean()], vec![y.mean()])
    }

    fn oracles(&self) -> Oracles {
        let sigma = self.sigma;
        let log_norm = self.log_norm();
        Oracles {
            exact_mhle: Some(Arc::new(|y: &ObservedData| Some((vec![y.mean()], vec![y.mean()])))),
            expected_hessian: Some(Arc::new(move |_theta: &[f64], n: usize| {
                let s2 = sigma * sigma;
                let n = n as f64;
                DMatrix::from_row_slice(2, 2, &[(n + 1.0) / s2, -1.0 / s2, -1.0 / s2, 1.0 / s2])
            })),
            profile_theta: Some(Arc::new(|y: &ObservedData, v: &[f64]| {
                let n = y.n() as f64;
                vec![(y.sum() + v[0]) / (n + 1.0)]
            })),
            marginal_loglik: Some(Arc::new(move |theta: &[f64], y: &ObservedData| {
                let n = y.n() as f64;
                let dev = y.mean() - theta[0];
                n * log_norm - (y.sum_sq_dev() + n * dev * dev) / (2.0 * sigma * sigma)
            })),
            ..Oracles::default()
        }
    }
}

pub fn normal_location_future(sigma: f64) -> Result<ModelRef> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(HlikError::InvalidInput(format!("sigma must be positive, got {sigma}")));
    }
    Ok(Arc::new(NormalLocationFuture { sigma }))
}

/// Exponential draws with mean λ, for simulation harnesses.
pub fn exp_draw(lambda: f64, rng: &mut McRng) -> f64 {
    let e: f64 = rng.sample(rand_distr::Exp1);
    lambda * e
}
