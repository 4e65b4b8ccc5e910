#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use hlik_core::model::{JointModel, McRng, ModelRef, ObservedData};
use hlik_core::numeric::{BoxDomain, Interval};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn normal_loglik(mean: f64, y: &ObservedData) -> f64 {
    let n = y.n() as f64;
    -0.5 * n * (2.0 * PI).ln() - 0.5 * y.observations().iter().map(|x| (x - mean).powi(2)).sum::<f64>()
}

/// f_a(v) = 1 + a·sin(2πv) on [0, 1]; y | v ~ N(v, 1).
/// Non-zero and equal at both ends, so the boundary test fails while both
/// integral conditions hold.
#[derive(Debug, Clone, Copy)]
pub struct WavyUniform;

impl JointModel for WavyUniform {
    fn name(&self) -> String {
        "wavy-uniform".into()
    }
    fn theta_dim(&self) -> usize {
        1
    }
    fn v_dim(&self) -> usize {
        1
    }
    fn log_cond(&self, _theta: &[f64], v: &[f64], y: &ObservedData) -> f64 {
        normal_loglik(v[0], y)
    }
    fn log_marg_v(&self, theta: &[f64], v: &[f64]) -> f64 {
        (1.0 + theta[0] * (2.0 * PI * v[0]).sin()).ln()
    }
    fn support_v(&self, _theta: &[f64]) -> BoxDomain {
        BoxDomain::single(Interval { lower: 0.0, upper: 1.0 })
    }
    fn support_theta(&self) -> BoxDomain {
        BoxDomain::single(Interval { lower: -1.0, upper: 1.0 })
    }
    fn theta_range(&self) -> BoxDomain {
        BoxDomain::single(Interval { lower: 0.1, upper: 0.8 })
    }
    fn sample_v(&self, theta: &[f64], rng: &mut McRng) -> Vec<f64> {
        let bound = 1.0 + theta[0].abs();
        loop {
            let v: f64 = rng.random();
            let u: f64 = rng.random::<f64>() * bound;
            if u <= 1.0 + theta[0] * (2.0 * PI * v).sin() {
                return vec![v];
            }
        }
    }
    fn sample_y(&self, _theta: &[f64], v: &[f64], n: usize, rng: &mut McRng) -> Vec<f64> {
        (0..n)
            .map(|_| v[0] + <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
            .collect()
    }
    fn initial_guess(&self, y: &ObservedData) -> (Vec<f64>, Vec<f64>) {
        (vec![0.3], vec![y.mean().clamp(0.05, 0.95)])
    }
}

/// v ~ Uniform(0, θ); y | v ~ N(v, 1). The support of v moves with θ.
#[derive(Debug, Clone, Copy)]
pub struct UniformScale;

impl JointModel for UniformScale {
    fn name(&self) -> String {
        "uniform-scale".into()
    }
    fn theta_dim(&self) -> usize {
        1
    }
    fn v_dim(&self) -> usize {
        1
    }
    fn log_cond(&self, _theta: &[f64], v: &[f64], y: &ObservedData) -> f64 {
        normal_loglik(v[0], y)
    }
    fn log_marg_v(&self, theta: &[f64], v: &[f64]) -> f64 {
        if (0.0..=theta[0]).contains(&v[0]) {
            -theta[0].ln()
        } else {
            f64::NEG_INFINITY
        }
    }
    fn support_v(&self, theta: &[f64]) -> BoxDomain {
        BoxDomain::single(Interval { lower: 0.0, upper: theta[0] })
    }
    fn support_theta(&self) -> BoxDomain {
        BoxDomain::single(Interval::positive_half_line())
    }
    fn theta_range(&self) -> BoxDomain {
        BoxDomain::single(Interval { lower: 0.5, upper: 5.0 })
    }
    fn support_v_depends_on_theta(&self) -> bool {
        true
    }
    fn sample_v(&self, theta: &[f64], rng: &mut McRng) -> Vec<f64> {
        vec![rng.random::<f64>() * theta[0]]
    }
    fn sample_y(&self, _theta: &[f64], v: &[f64], n: usize, rng: &mut McRng) -> Vec<f64> {
        (0..n)
            .map(|_| v[0] + <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
            .collect()
    }
    fn initial_guess(&self, y: &ObservedData) -> (Vec<f64>, Vec<f64>) {
        let v = y.mean().abs().max(0.1);
        (vec![2.0 * v], vec![v])
    }
}

pub fn wavy() -> ModelRef {
    Arc::new(WavyUniform)
}

pub fn uniform_scale() -> ModelRef {
    Arc::new(UniformScale)
}
