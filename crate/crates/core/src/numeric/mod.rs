//! Shared numerical primitives: quadrature over possibly infinite boxes, finite
//! differences, and reproducible Monte Carlo.

pub mod diff;
pub mod domain;
pub mod ext_real;
pub mod montecarlo;
pub mod quadrature;
pub mod special;

pub use diff::{gradient, hessian, jacobian};
pub use domain::{BoxDomain, Interval, QuadratureSpec, TailMap};
pub use montecarlo::{map_replicates, mc_expect, McEstimate, RngStream, VarianceEstimate};
pub use quadrature::{integrate, integrate_1d, integrate_1d_scaled, Integral};
