use std::sync::Arc;

use super::builtins::{
    bayarri_log, bayarri_marginal, exponential_future, normal_location_future, ParamScale,
    UnobservableScale,
};
use super::joint::ModelRef;
use super::transform::{ScaleMap, Transformed};
use crate::error::{HlikError, Result};
use crate::numeric::Interval;

pub const MODEL_NAMES: [&str; 5] = [
    "exp-future",
    "exp-future-log",
    "bayarri",
    "bayarri-log",
    "normal-future",
];

/// Look up a built-in model by registry name, in its natural parameterization.
pub fn model_by_name(name: &str) -> Result<ModelRef> {
    model_with_param_scale(name, ParamScale::Lambda)
}

/// Look up a built-in model with the parameter on the requested working scale.
pub fn model_with_param_scale(name: &str, scale: ParamScale) -> Result<ModelRef> {
    let default_theta = Interval { lower: 0.1, upper: 10.0 };
    let base = match name {
        "exp-future" => return Ok(exponential_future(UnobservableScale::NaturalU, scale)),
        "exp-future-log" => return Ok(exponential_future(UnobservableScale::LogU, scale)),
        "bayarri" => bayarri_marginal(default_theta),
        "bayarri-log" => bayarri_log(default_theta),
        "normal-future" => normal_location_future(1.0)?,
        other => {
            return Err(HlikError::InvalidInput(format!(
                "unknown model '{other}' (known: {})",
                MODEL_NAMES.join(", ")
            )))
        }
    };
    match scale {
        ParamScale::Lambda => Ok(base),
        ParamScale::LogLambda => Ok(Arc::new(Transformed::parameter(base, ScaleMap::Log)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_registered_name_resolves() {
        for name in MODEL_NAMES {
            let m = model_by_name(name).unwrap();
            assert_eq!(m.theta_dim(), 1);
            assert_eq!(m.v_dim(), 1);
        }
        assert!(model_by_name("salamander").is_err());
    }

    #[test]
    fn log_parameter_scale_needs_positive_parameter() {
        assert!(model_with_param_scale("bayarri", ParamScale::LogLambda).is_ok());
        assert!(model_with_param_scale("normal-future", ParamScale::LogLambda).is_err());
    }
}
