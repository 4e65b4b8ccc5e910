use thiserror::Error;

/// Errors produced by the numerical and statistical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HlikError {
    #[error("quadrature did not converge: {0}")]
    NonConvergent(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("point outside the support: {0}")]
    OutOfSupport(String),

    #[error("h-likelihood has no interior mode: {0}")]
    NoInteriorMode(String),

    #[error("hessian is not negative definite at the mode")]
    HessianNotNegDef,

    #[error("adjustment curvature D(h, theta) is not positive at the profile point")]
    CurvatureNotPositive,

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("no transform in the catalog satisfies both conditions")]
    EmptyCatalogResult,

    #[error("posterior is improper: {0}")]
    ImproperPosterior(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("iteration limit reached after {0} iterations")]
    MaxIterations(usize),
}

pub type Result<T> = std::result::Result<T, HlikError>;

impl HlikError {
    /// Configuration or argument problems, as opposed to numerical failures.
    pub fn is_input_error(&self) -> bool {
        matches!(self, HlikError::InvalidInput(_))
    }

    /// Short machine-readable reason tag.
    pub fn kind(&self) -> &'static str {
        match self {
            HlikError::NonConvergent(_) => "NonConvergent",
            HlikError::NonFinite(_) => "NonFinite",
            HlikError::OutOfSupport(_) => "OutOfSupport",
            HlikError::NoInteriorMode(_) => "NoInteriorMode",
            HlikError::HessianNotNegDef => "HessianNotNegDef",
            HlikError::CurvatureNotPositive => "CurvatureNotPositive",
            HlikError::NotApplicable(_) => "NotApplicable",
            HlikError::EmptyCatalogResult => "EmptyCatalogResult",
            HlikError::ImproperPosterior(_) => "ImproperPosterior",
            HlikError::Unsupported(_) => "Unsupported",
            HlikError::InvalidInput(_) => "InvalidInput",
            HlikError::MaxIterations(_) => "MaxIterations",
        }
    }
}
