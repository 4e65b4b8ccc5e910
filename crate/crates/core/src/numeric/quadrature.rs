//! Adaptive Gauss–Kronrod (7/15) quadrature over rectangular domains.
//!
//! Infinite axes are compactified onto finite intervals before the adaptive
//! rule runs, so the core only ever sees finite panels. Domains of dimension
//! up to three are handled by iterated one-dimensional integration.

use serde::{Deserialize, Serialize};

use super::domain::{BoxDomain, Interval, QuadratureSpec, TailMap};
use crate::error::{HlikError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

pub const MAX_DIM: usize = 3;

/// Integral estimate with its absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    resabs: f64,
}

fn gk15<F>(f: &mut F, a: f64, b: f64) -> Result<Panel>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut resabs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    Ok(Panel {
        a,
        b,
        value,
        error,
        resabs,
    })
}

/// Adaptive bisection on a finite interval, always splitting the panel with the
/// largest error estimate.
fn adaptive_finite<F>(f: &mut F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Integral>
where
    F: FnMut(f64) -> Result<f64>,
{
    let first = gk15(f, a, b)?;
    let mut panels = vec![first];
    loop {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        let tol = spec.abs_tol.max(spec.rel_tol * value.abs());
        if error <= tol {
            return Ok(Integral { value, error });
        }
        let resabs: f64 = panels.iter().map(|p| p.resabs).sum();
        if error <= 50.0 * f64::EPSILON * resabs {
            // roundoff floor reached
            return Ok(Integral { value, error });
        }
        if panels.len() >= spec.max_subdivisions {
            return Err(HlikError::NonConvergent(format!(
                "subdivision budget {} exhausted (estimate {value:.6e}, error {error:.3e})",
                spec.max_subdivisions
            )));
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty panel list");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) {
            return Err(HlikError::NonConvergent(format!(
                "panel [{}, {}] cannot be bisected further",
                p.a, p.b
            )));
        }
        panels.push(gk15(f, p.a, mid)?);
        panels.push(gk15(f, mid, p.b)?);
    }
}

fn checked(x: f64, fx: f64) -> Result<f64> {
    if fx.is_finite() {
        Ok(fx)
    } else {
        Err(HlikError::NonFinite(format!("integrand returned {fx} at {x}")))
    }
}

/// Apply a Jacobian, treating an exactly-zero integrand as zero regardless of the weight.
fn weighted(fx: f64, jac: f64) -> f64 {
    if fx == 0.0 {
        0.0
    } else {
        fx * jac
    }
}

/// One-dimensional integral of a fallible integrand over an interval, using `center`
/// and `scale` to place the compactifying maps of infinite ends.
pub fn integrate_1d_scaled<F>(
    mut f: F,
    interval: Interval,
    center: f64,
    scale: f64,
    spec: &QuadratureSpec,
) -> Result<Integral>
where
    F: FnMut(f64) -> Result<f64>,
{
    spec.validate()?;
    let scale = if scale.is_finite() && scale > 0.0 { scale } else { 1.0 };
    let (lo, hi) = (interval.lower, interval.upper);
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => adaptive_finite(&mut |x| checked(x, f(x)?), lo, hi, spec),
        _ if spec.tail_map == TailMap::None => Err(HlikError::InvalidInput(
            "infinite axis requires a tail map".into(),
        )),
        (true, false) => half_line(&mut f, lo, 1.0, scale, spec),
        (false, true) => half_line(&mut f, hi, -1.0, scale, spec),
        (false, false) => {
            let c = if center.is_finite() { center } else { 0.0 };
            match spec.tail_map {
                TailMap::LogisticCompactify => {
                    let mut g = |t: f64| {
                        let x = c + scale * (t / (1.0 - t)).ln();
                        let fx = checked(x, f(x)?)?;
                        Ok(weighted(fx, scale / (t * (1.0 - t))))
                    };
                    adaptive_finite(&mut g, 0.0, 1.0, spec)
                }
                _ => {
                    let right = half_line(&mut f, c, 1.0, scale, spec)?;
                    let left = half_line(&mut f, c, -1.0, scale, spec)?;
                    Ok(Integral {
                        value: right.value + left.value,
                        error: right.error + left.error,
                    })
                }
            }
        }
    }
}

/// Integral over `[origin, ∞)` (direction +1) or `(−∞, origin]` (direction −1).
fn half_line<F>(
    f: &mut F,
    origin: f64,
    direction: f64,
    scale: f64,
    spec: &QuadratureSpec,
) -> Result<Integral>
where
    F: FnMut(f64) -> Result<f64>,
{
    match spec.tail_map {
        TailMap::ExpCompactify => {
            let mut g = |t: f64| {
                let x = origin - direction * scale * (-t).ln_1p();
                let fx = checked(x, f(x)?)?;
                Ok(weighted(fx, scale / (1.0 - t)))
            };
            adaptive_finite(&mut g, 0.0, 1.0, spec)
        }
        _ => {
            let mut g = |t: f64| {
                let s = 1.0 - t;
                let x = origin + direction * scale * t / s;
                let fx = checked(x, f(x)?)?;
                Ok(weighted(fx, scale / (s * s)))
            };
            adaptive_finite(&mut g, 0.0, 1.0, spec)
        }
    }
}

/// One-dimensional integral with the default placement of tail maps.
pub fn integrate_1d<F>(f: F, interval: Interval, spec: &QuadratureSpec) -> Result<Integral>
where
    F: FnMut(f64) -> Result<f64>,
{
    integrate_1d_scaled(f, interval, interval.center(), 1.0, spec)
}

/// Integral of `f` over a box of dimension 1 to 3 by iterated quadrature.
///
/// Inner integrals are computed at a tenth of the requested relative tolerance;
/// the reported error adds that inner budget to the outer estimate.
pub fn integrate<F>(f: F, domain: &BoxDomain, spec: &QuadratureSpec) -> Result<Integral>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    spec.validate()?;
    let d = domain.dim();
    if d == 0 || d > MAX_DIM {
        return Err(HlikError::Unsupported(format!(
            "quadrature supports dimensions 1..={MAX_DIM}, got {d}"
        )));
    }
    let mut point = vec![0.0; d];
    nested(&f, domain, 0, &mut point, spec)
}

fn nested<F>(
    f: &F,
    domain: &BoxDomain,
    axis: usize,
    point: &mut Vec<f64>,
    spec: &QuadratureSpec,
) -> Result<Integral>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let interval = domain.axes[axis];
    if axis + 1 == domain.dim() {
        return integrate_1d(
            |x| {
                point[axis] = x;
                f(point)
            },
            interval,
            spec,
        );
    }
    let inner_spec = spec.with_rel_tol(spec.rel_tol * 0.1).with_abs_tol(spec.abs_tol * 0.1);
    let mut cell = point.clone();
    let outer = integrate_1d(
        |x| {
            cell[axis] = x;
            let mut inner_point = cell.clone();
            nested(f, domain, axis + 1, &mut inner_point, &inner_spec).map(|r| r.value)
        },
        interval,
        spec,
    )?;
    Ok(Integral {
        value: outer.value,
        error: outer.error + inner_spec.rel_tol * outer.value.abs(),
    })
}
