use serde::{Deserialize, Serialize};

use crate::error::{HlikError, Result};

/// A closed interval on the extended real line. Either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "super::ext_real")]
    pub lower: f64,
    #[serde(with = "super::ext_real")]
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || lower >= upper {
            return Err(HlikError::InvalidInput(format!(
                "interval requires lower < upper, got [{lower}, {upper}]"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn real_line() -> Self {
        Self {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }

    pub fn positive_half_line() -> Self {
        Self {
            lower: 0.0,
            upper: f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.lower.is_finite() && self.upper.is_finite()
    }

    /// Strict interior membership.
    pub fn contains_interior(&self, x: f64) -> bool {
        x > self.lower && x < self.upper
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }

    /// Length of the interval, infinite for unbounded intervals.
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// A representative interior point used to seed searches.
    pub fn center(&self) -> f64 {
        match (self.lower.is_finite(), self.upper.is_finite()) {
            (true, true) => 0.5 * (self.lower + self.upper),
            (true, false) => self.lower + 1.0,
            (false, true) => self.upper - 1.0,
            (false, false) => 0.0,
        }
    }
}

/// Rectangular domain: a product of intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub axes: Vec<Interval>,
}

impl BoxDomain {
    pub fn new(axes: Vec<Interval>) -> Result<Self> {
        if axes.is_empty() {
            return Err(HlikError::InvalidInput(
                "box domain needs at least one axis".into(),
            ));
        }
        for axis in &axes {
            Interval::new(axis.lower, axis.upper)?;
        }
        Ok(Self { axes })
    }

    pub fn single(axis: Interval) -> Self {
        Self { axes: vec![axis] }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn contains_interior(&self, x: &[f64]) -> bool {
        x.len() == self.axes.len()
            && self
                .axes
                .iter()
                .zip(x)
                .all(|(axis, &xi)| axis.contains_interior(xi))
    }
}

/// Change of variables used for infinite axes.
///
/// `LogisticCompactify` maps the whole line through the logistic function; half-lines
/// always use the exponential map. `ExpCompactify` uses the exponential map on both
/// halves of a whole line split at the origin. `None` rejects infinite axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailMap {
    None,
    ExpCompactify,
    LogisticCompactify,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub tail_map: TailMap,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_subdivisions: 2000,
            tail_map: TailMap::LogisticCompactify,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(HlikError::InvalidInput(
                "quadrature tolerances must be positive".into(),
            ));
        }
        if self.max_subdivisions == 0 {
            return Err(HlikError::InvalidInput(
                "max_subdivisions must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }
}
