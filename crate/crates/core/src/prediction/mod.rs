//! Predictive distributions for a future observation: the h-distribution from the
//! adjusted profile h-likelihood, the pivotal law, flat-prior posterior predictives,
//! and highest-density predictive intervals.

pub mod closed_form;
pub mod grid;
pub mod predictive;

pub use closed_form::{hdp_multiplier, FlatPrior, RatioPareto};
pub use grid::{build_grid, distance_on_grid, DensityGrid, Distance, GridSpec, HdpInterval, Spacing};
pub use predictive::{
    aphl, compare_triple, h_distribution, hdp_interval, pivotal_predictive, posterior_predictive_flat,
    posterior_predictive_numeric, prior_for_scale, profile_theta, profile_theta_newton, Aphl, PredictiveGrids,
    PredictiveLaw, PredictiveTriple,
};
