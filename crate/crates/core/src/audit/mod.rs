//! Bartlett identity audits for the h-likelihood: integral conditions on the
//! marginal density of v, boundary tests, Monte Carlo checks of the full
//! identities, and a search over a fixed catalog of transformations of v.

pub mod boundary;
pub mod conditions;
pub mod report;

pub use boundary::{all_vanish, check_boundary, BoundaryVerdict, FaceCheck, Side};
pub use conditions::{check_condition1, check_condition2, density_mass, ConditionMatrix, ConditionValue};
pub use report::{
    audit, bartlize_search, check_full_identities, identity_tolerance, AuditSettings, BartlettReport,
    BartlizeCandidate, Entry, FullIdentityResidual, FullIdentitySettings, ThetaAudit, ThetaGrid,
    TransformKind, Verdict,
};
