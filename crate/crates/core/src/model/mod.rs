//! Joint models f_θ(y, v) = f_θ(y | v)·f_θ(v), scale wrappers, and the built-in
//! models with their closed-form oracles.

pub mod builtins;
pub mod data;
pub mod joint;
pub mod likelihood;
pub mod registry;
pub mod transform;

pub use builtins::{
    bayarri_log, bayarri_marginal, exponential_future, normal_location_future, ParamScale,
    UnobservableScale,
};
pub use data::{ObservedData, ParameterVector, ScaleLabel, UnobservableVector};
pub use joint::{
    check_support, h_derivatives, h_raw, log_marg_derivatives, Derivatives, JointModel, McRng,
    ModelRef, Oracles,
};
pub use likelihood::{conditional_mode, h_loglik, laplace_marginal, marginal_loglik};
pub use registry::{model_by_name, model_with_param_scale, MODEL_NAMES};
pub use transform::{ScaleMap, Transformed};
