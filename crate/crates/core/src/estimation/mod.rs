//! Joint maximum h-likelihood estimation, expected and observed Hessians, and the
//! remainder term of the linearised estimation error.

pub mod mhle;
pub mod optimize;

pub use mhle::{
    expected_hessian, from_rows, inverse_information, observed_vs_expected, r_term_decomposition,
    solve_mhle, to_rows, ExpectedHessian, ExpectedHessianMethod, InfoPoint, InverseInformation,
    MhleSolution, MhleStatus, RTerm, RowMatrix,
};
pub use optimize::{maximize, Evaluation, NewtonSettings, OptimStatus, Problem};
