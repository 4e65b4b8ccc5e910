//! Limits of f_θ(v) and ∂f_θ(v)/∂v on the faces of a rectangular support.
//!
//! Each face is approached along a geometric sequence h_k = 2^{-k}: at a finite
//! endpoint a the points are a ± h_k, at an infinite end they are c ± s(1/h_k − 1),
//! the coordinates of the rational tail map. The sequence is Richardson-extrapolated
//! to h = 0 assuming an expansion in integer powers of h.

use serde::{Deserialize, Serialize};

use super::conditions::{density_center, ensure_theta_free};
use crate::error::{HlikError, Result};
use crate::model::{log_marg_derivatives, JointModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryVerdict {
    Vanishes,
    NonVanishing,
    /// Non-zero but equal at both ends of the axis, so the integral still vanishes.
    EqualEndpoints,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceCheck {
    pub axis: usize,
    pub side: Side,
    /// Endpoint location (may be ±∞).
    #[serde(with = "crate::numeric::ext_real")]
    pub location: f64,
    pub order: u8,
    pub limit: f64,
    pub verdict: BoundaryVerdict,
}

const LEVELS: usize = 24;
const FIRST_LEVEL: i32 = 2;

/// Richardson table on values at h_k = h0·2^{-k}; returns the most refined entry.
fn richardson(values: &[f64], depth: usize) -> f64 {
    let n = values.len();
    let depth = depth.min(n - 1);
    let mut row: Vec<f64> = values[n - depth - 1..].to_vec();
    for level in 1..=depth {
        let factor = f64::powi(2.0, level as i32);
        row = row
            .windows(2)
            .map(|w| (factor * w[1] - w[0]) / (factor - 1.0))
            .collect();
    }
    row[0]
}

fn face_value(m: &dyn JointModel, theta: &[f64], point: &[f64], axis: usize, order: u8) -> Result<f64> {
    let lm = m.log_marg_v(theta, point);
    if lm.is_nan() {
        return Err(HlikError::NonFinite(format!("log f(v) is NaN at v={point:?}")));
    }
    let f = lm.exp();
    if f == 0.0 || order == 1 {
        return Ok(f);
    }
    let der = log_marg_derivatives(m, theta, point)?;
    Ok(f * der.grad[m.theta_dim() + axis])
}

fn face_limit(
    m: &dyn JointModel,
    theta: &[f64],
    reference: &[f64],
    scale: f64,
    axis: usize,
    side: Side,
    order: u8,
) -> Result<(f64, f64)> {
    let interval = m.support_v(theta).axes[axis];
    let end = match side {
        Side::Lower => interval.lower,
        Side::Upper => interval.upper,
    };
    let sign = match side {
        Side::Lower => 1.0,
        Side::Upper => -1.0,
    };
    let h0 = if interval.is_finite() { (interval.width() / 4.0).min(1.0) } else { 1.0 };
    let mut values = Vec::with_capacity(LEVELS);
    let mut peak: f64 = 0.0;
    for k in 0..LEVELS as i32 {
        let h = h0 * f64::powi(2.0, -(k + FIRST_LEVEL));
        let x = if end.is_finite() {
            end + sign * h
        } else {
            reference[axis] - sign * scale * (1.0 / h - 1.0)
        };
        let mut point = reference.to_vec();
        point[axis] = x;
        let g = face_value(m, theta, &point, axis, order)?;
        peak = peak.max(g.abs());
        values.push(g);
    }
    // infinite ends: values typically collapse to 0 faster than any power of h
    let limit = if values.iter().rev().take(4).all(|v| *v == 0.0) {
        0.0
    } else {
        richardson(&values, 3)
    };
    Ok((limit, peak))
}

/// Extrapolated boundary behaviour on every face of Ω_v.
/// `order` 1 inspects f_θ(v); order 2 inspects ∂f_θ/∂v along the face normal.
pub fn check_boundary(m: &dyn JointModel, theta: &[f64], order: u8) -> Result<Vec<FaceCheck>> {
    if order != 1 && order != 2 {
        return Err(HlikError::InvalidInput(format!("boundary order must be 1 or 2, got {order}")));
    }
    ensure_theta_free(m)?;
    let (reference, scales) = density_center(m, theta);
    let support = m.support_v(theta);
    let mut out = Vec::new();
    for (axis, interval) in support.axes.iter().enumerate() {
        let (lo, peak_lo) = face_limit(m, theta, &reference, scales[axis], axis, Side::Lower, order)?;
        let (hi, peak_hi) = face_limit(m, theta, &reference, scales[axis], axis, Side::Upper, order)?;
        let tol = 1e-6 * peak_lo.max(peak_hi).max(1.0);
        let vanish = |x: f64| x.abs() <= tol;
        let equal = !vanish(lo) && !vanish(hi) && (lo - hi).abs() <= tol;
        let verdict = |x: f64| {
            if vanish(x) {
                BoundaryVerdict::Vanishes
            } else if equal {
                BoundaryVerdict::EqualEndpoints
            } else {
                BoundaryVerdict::NonVanishing
            }
        };
        out.push(FaceCheck {
            axis,
            side: Side::Lower,
            location: interval.lower,
            order,
            limit: lo,
            verdict: verdict(lo),
        });
        out.push(FaceCheck {
            axis,
            side: Side::Upper,
            location: interval.upper,
            order,
            limit: hi,
            verdict: verdict(hi),
        });
    }
    Ok(out)
}

/// True when every face vanishes outright.
pub fn all_vanish(faces: &[FaceCheck]) -> bool {
    faces.iter().all(|f| f.verdict == BoundaryVerdict::Vanishes)
}
