//! Numerical toolkit for h-likelihood inference and prediction with continuous
//! unobservables.
//!
//! The crate is organised bottom-up:
//!
//! * [`numeric`]: quadrature, finite differences, reproducible Monte Carlo;
//! * [`model`]: joint models, scale wrappers and the built-in models;
//! * [`audit`]: Bartlett-identity conditions, boundary tests and the search for a
//!   Bartlizing transform of the unobservable;
//! * [`estimation`]: the joint maximiser of h and its Hessians;
//! * [`prediction`]: adjusted-profile h-distributions, pivotal and flat-prior
//!   predictive densities, highest-density intervals;
//! * [`simulation`]: Monte Carlo experiments and the reproduction report.

pub mod audit;
pub mod error;
pub mod estimation;
pub mod model;
pub mod numeric;
pub mod prediction;
pub mod simulation;

pub use error::{HlikError, Result};
