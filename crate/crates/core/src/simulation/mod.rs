//! Monte Carlo experiments: prediction-set coverage, the remainder term of the score
//! expansion, variance decompositions, parameter-scale sensitivity and the
//! reproduction report.

pub mod config;
pub mod coverage;
pub mod moments;
pub mod reproduce;
pub mod scales;

pub use config::{ExperimentConfig, Method};
pub use coverage::{run_coverage, CoverageResult, CoverageRow};
pub use moments::{
    duality_check, exact_mean_r, limit_law, r_and_z, r_term_study, variance_breakdown, BreakdownRow, DualityResult,
    DualityRow, DualitySide, LimitLaw, MomentConfig, RTermRow, RTermStudy, Term, EULER_GAMMA, PI2_OVER_6,
};
pub use scales::{scale_sensitivity_study, ScaleConfig, ScaleRow, ScaleStatus};
pub use reproduce::{reproduce_paper, Check, Reported, ReproduceSettings, ReproductionReport};
