//! Central finite differences.

use nalgebra::DMatrix;

use crate::error::{HlikError, Result};

/// Cube root of machine epsilon, the balance point for first differences.
pub const FIRST_DIFF_STEP: f64 = 6.055_454_452_393_343e-6;

/// Fourth root of machine epsilon, used for second differences.
pub const SECOND_DIFF_STEP: f64 = 1.220_703_125e-4;

fn scaled(base: f64, x: f64) -> f64 {
    base * x.abs().max(1.0)
}

fn eval<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Result<f64> {
    let v = f(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(HlikError::NonFinite(format!("function returned {v} at {x:?}")))
    }
}

/// Central-difference gradient. `step` is an absolute step; `None` uses
/// `ε^{1/3}·max(1, |x_i|)` per coordinate.
pub fn gradient<F>(f: F, x: &[f64], step: Option<f64>) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    if let Some(h) = step {
        if !(h > 0.0 && h.is_finite()) {
            return Err(HlikError::InvalidInput(format!("step must be positive, got {h}")));
        }
    }
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let h = step.unwrap_or_else(|| scaled(FIRST_DIFF_STEP, x[i]));
        probe[i] = x[i] + h;
        let fp = eval(&f, &probe)?;
        probe[i] = x[i] - h;
        let fm = eval(&f, &probe)?;
        probe[i] = x[i];
        grad.push((fp - fm) / (2.0 * h));
    }
    Ok(grad)
}

/// Central second-difference Hessian. The upper triangle is computed and mirrored,
/// so the result is exactly symmetric.
pub fn hessian<F>(f: F, x: &[f64], step: Option<f64>) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    if let Some(h) = step {
        if !(h > 0.0 && h.is_finite()) {
            return Err(HlikError::InvalidInput(format!("step must be positive, got {h}")));
        }
    }
    let d = x.len();
    let steps: Vec<f64> = x
        .iter()
        .map(|&xi| step.unwrap_or_else(|| scaled(SECOND_DIFF_STEP, xi)))
        .collect();
    let f0 = eval(&f, x)?;
    let mut probe = x.to_vec();
    let mut out = DMatrix::zeros(d, d);
    for i in 0..d {
        let hi = steps[i];
        probe[i] = x[i] + hi;
        let fp = eval(&f, &probe)?;
        probe[i] = x[i] - hi;
        let fm = eval(&f, &probe)?;
        probe[i] = x[i];
        out[(i, i)] = (fp - 2.0 * f0 + fm) / (hi * hi);
        for j in (i + 1)..d {
            let hj = steps[j];
            let mut corner = |si: f64, sj: f64| -> Result<f64> {
                probe[i] = x[i] + si * hi;
                probe[j] = x[j] + sj * hj;
                let v = eval(&f, &probe);
                probe[i] = x[i];
                probe[j] = x[j];
                v
            };
            let fpp = corner(1.0, 1.0)?;
            let fpm = corner(1.0, -1.0)?;
            let fmp = corner(-1.0, 1.0)?;
            let fmm = corner(-1.0, -1.0)?;
            let v = (fpp - fpm - fmp + fmm) / (4.0 * hi * hj);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

/// Jacobian of a vector-valued map by central differences (rows = outputs).
pub fn jacobian<F>(f: F, x: &[f64], step: Option<f64>) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut probe = x.to_vec();
    let base = f(x)?;
    let m = base.len();
    let mut out = DMatrix::zeros(m, x.len());
    for j in 0..x.len() {
        let h = step.unwrap_or_else(|| scaled(FIRST_DIFF_STEP, x[j]));
        probe[j] = x[j] + h;
        let fp = f(&probe)?;
        probe[j] = x[j] - h;
        let fm = f(&probe)?;
        probe[j] = x[j];
        for i in 0..m {
            let v = (fp[i] - fm[i]) / (2.0 * h);
            if !v.is_finite() {
                return Err(HlikError::NonFinite(format!("jacobian entry ({i}, {j})")));
            }
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_square() {
        let g = gradient(|x| x[0] * x[0], &[3.0], Some(1e-5)).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-8);
    }

    #[test]
    fn constant_has_zero_gradient() {
        let g = gradient(|_| 4.2, &[1.0, -2.0, 7.0], None).unwrap();
        assert_eq!(g, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn quadratic_hessian_is_diagonal() {
        let h = hessian(|x| x[0] * x[0] + 3.0 * x[1] * x[1], &[0.7, -1.3], None).unwrap();
        assert!((h[(0, 0)] - 2.0).abs() < 1e-6);
        assert!((h[(1, 1)] - 6.0).abs() < 1e-6);
        assert!(h[(0, 1)].abs() < 1e-6);
    }

    #[test]
    fn bilinear_cross_term() {
        let h = hessian(|x| x[0] * x[1], &[2.0, 5.0], None).unwrap();
        assert!((h[(0, 1)] - 1.0).abs() < 1e-8);
        assert_eq!(h[(0, 1)], h[(1, 0)]);
    }

    #[test]
    fn nan_is_an_error() {
        assert!(matches!(
            gradient(|x| x[0].ln(), &[-1.0], None),
            Err(HlikError::NonFinite(_))
        ));
        assert!(gradient(|x| x[0], &[1.0], Some(-1.0)).is_err());
    }

    #[test]
    fn jacobian_of_linear_map() {
        let j = jacobian(|x| Ok(vec![2.0 * x[0] + x[1], -x[1]]), &[1.0, 1.0], None).unwrap();
        assert!((j[(0, 0)] - 2.0).abs() < 1e-9);
        assert!((j[(0, 1)] - 1.0).abs() < 1e-9);
        assert!((j[(1, 1)] + 1.0).abs() < 1e-9);
    }
}
