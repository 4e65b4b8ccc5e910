//! Integral conditions on the marginal density of the unobservable:
//! ∫ ∂f/∂v dv = 0 (first identity) and ∫ ∂²f/∂v² dv = 0 (second identity).

use serde::{Deserialize, Serialize};

use crate::error::{HlikError, Result};
use crate::estimation::optimize::{maximize, Evaluation, NewtonSettings, OptimStatus, Problem};
use crate::estimation::RowMatrix;
use crate::model::{log_marg_derivatives, JointModel};
use crate::numeric::{integrate, integrate_1d_scaled, QuadratureSpec};

/// Quadrature value of a condition with its error estimate, entrywise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionValue {
    pub value: Vec<f64>,
    pub error: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionMatrix {
    pub value: RowMatrix,
    pub error: RowMatrix,
}

impl ConditionValue {
    pub fn max_abs(&self) -> f64 {
        self.value.iter().fold(0.0, |a, b| a.max(b.abs()))
    }
    pub fn max_error(&self) -> f64 {
        self.error.iter().fold(0.0, |a, b| a.max(*b))
    }
}

impl ConditionMatrix {
    pub fn max_abs(&self) -> f64 {
        self.value.iter().flatten().fold(0.0, |a, b| a.max(b.abs()))
    }
    pub fn max_error(&self) -> f64 {
        self.error.iter().flatten().fold(0.0, |a, b| a.max(*b))
    }
}

pub(crate) fn ensure_theta_free(m: &dyn JointModel) -> Result<()> {
    if m.support_v_depends_on_theta() {
        Err(HlikError::NotApplicable(format!(
            "support of the unobservable in {} depends on θ",
            m.name()
        )))
    } else {
        Ok(())
    }
}

/// Mode of log f_θ(v) with the matching normal scale, used to place the quadrature maps.
pub(crate) fn density_center(m: &dyn JointModel, theta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let support = m.support_v(theta);
    let p = m.theta_dim();
    let d = m.v_dim();
    let fallback = || {
        let c: Vec<f64> = support.axes.iter().map(|a| a.center()).collect();
        (c, vec![1.0; d])
    };
    let objective = |v: &[f64]| -> Result<Evaluation> {
        let full = log_marg_derivatives(m, theta, v)?;
        Ok(Evaluation {
            value: full.value,
            grad: full.grad.rows(p, d).into_owned(),
            hess: full.hess.view((p, p), (d, d)).into_owned(),
        })
    };
    let none = |_: &[f64]| Vec::new();
    let problem = Problem {
        objective: &objective,
        bounds: support.clone(),
        theta_count: 0,
        to_natural: &none,
    };
    let start: Vec<f64> = support.axes.iter().map(|a| a.center()).collect();
    match maximize(&problem, &start, &NewtonSettings::default()) {
        Ok(out) if out.status == OptimStatus::Converged => {
            let scales = (0..d)
                .map(|i| {
                    let c = -out.eval.hess[(i, i)];
                    if c > 0.0 { c.sqrt().recip() } else { 1.0 }
                })
                .collect();
            (out.x, scales)
        }
        _ => fallback(),
    }
}

/// f_θ(v) together with S and ∂S/∂v (v-blocks only), zero where the density underflows.
fn density_and_score(m: &dyn JointModel, theta: &[f64], v: &[f64]) -> Result<Option<(f64, Vec<f64>, Vec<Vec<f64>>)>> {
    let lm = m.log_marg_v(theta, v);
    if lm.is_nan() {
        return Err(HlikError::NonFinite(format!("log f(v) is NaN at v={v:?}")));
    }
    let f = lm.exp();
    if f == 0.0 {
        return Ok(None);
    }
    if !f.is_finite() {
        return Err(HlikError::NonFinite(format!("f(v) = {f} at v={v:?}")));
    }
    let p = m.theta_dim();
    let d = m.v_dim();
    let der = log_marg_derivatives(m, theta, v)?;
    let s: Vec<f64> = (0..d).map(|i| der.grad[p + i]).collect();
    let ds: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| der.hess[(p + i, p + j)]).collect())
        .collect();
    Ok(Some((f, s, ds)))
}

fn integrate_over_v<G>(m: &dyn JointModel, theta: &[f64], spec: &QuadratureSpec, g: G) -> Result<(f64, f64)>
where
    G: Fn(&[f64]) -> Result<f64>,
{
    let support = m.support_v(theta);
    let (c, s) = density_center(m, theta);
    // finite-difference scores carry ~1e-9 noise; a zero integral cannot beat that
    let fd_spec;
    let spec = if m.log_marg_v_derivs(theta, &c).is_none() {
        fd_spec = spec.with_abs_tol(spec.abs_tol.max(1e-9));
        &fd_spec
    } else {
        spec
    };
    let r = if m.v_dim() == 1 {
        integrate_1d_scaled(|x| g(&[x]), support.axes[0], c[0], s[0], spec)?
    } else {
        integrate(&g, &support, spec)?
    };
    Ok((r.value, r.error))
}

/// E_θ[S_θ(v)] = ∫ ∂f_θ(v)/∂v dv per coordinate.
pub fn check_condition1(m: &dyn JointModel, theta: &[f64], spec: &QuadratureSpec) -> Result<ConditionValue> {
    ensure_theta_free(m)?;
    let d = m.v_dim();
    let mut value = Vec::with_capacity(d);
    let mut error = Vec::with_capacity(d);
    for j in 0..d {
        let (v, e) = integrate_over_v(m, theta, spec, |x| {
            Ok(density_and_score(m, theta, x)?.map_or(0.0, |(f, s, _)| f * s[j]))
        })?;
        value.push(v);
        error.push(e);
    }
    Ok(ConditionValue { value, error })
}

/// E_θ[∂S/∂v + S Sᵀ] = ∫ ∂²f_θ(v)/∂v² dv.
pub fn check_condition2(m: &dyn JointModel, theta: &[f64], spec: &QuadratureSpec) -> Result<ConditionMatrix> {
    ensure_theta_free(m)?;
    let d = m.v_dim();
    let mut value = vec![vec![0.0; d]; d];
    let mut error = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in i..d {
            let (v, e) = integrate_over_v(m, theta, spec, |x| {
                Ok(density_and_score(m, theta, x)?.map_or(0.0, |(f, s, ds)| f * (ds[i][j] + s[i] * s[j])))
            })?;
            value[i][j] = v;
            value[j][i] = v;
            error[i][j] = e;
            error[j][i] = e;
        }
    }
    Ok(ConditionMatrix { value, error })
}

/// ∫ f_θ(v) dv, which should be 1 for every model.
pub fn density_mass(m: &dyn JointModel, theta: &[f64], spec: &QuadratureSpec) -> Result<f64> {
    Ok(integrate_over_v(m, theta, spec, |x| Ok(m.log_marg_v(theta, x).exp()))?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{bayarri_log, bayarri_marginal, normal_location_future};
    use crate::numeric::Interval;

    fn dom() -> Interval {
        Interval::new(0.1, 10.0).unwrap()
    }

    #[test]
    fn bayarri_natural_scale_first_condition_is_minus_theta() {
        let m = bayarri_marginal(dom());
        for &t in &[0.1, 0.5, 2.0, 10.0] {
            let c = check_condition1(m.as_ref(), &[t], &QuadratureSpec::default()).unwrap();
            assert!((c.value[0] + t).abs() < 1e-8 * t, "{t}: {:?}", c);
        }
        let c2 = check_condition2(m.as_ref(), &[2.0], &QuadratureSpec::default()).unwrap();
        // ∫ f'' = −f'(0) = θ²
        assert!((c2.value[0][0] - 4.0).abs() < 1e-7);
    }

    #[test]
    fn bayarri_log_scale_is_bartlized() {
        let m = bayarri_log(dom());
        for &t in &[0.1, 0.5, 2.0, 10.0] {
            let c1 = check_condition1(m.as_ref(), &[t], &QuadratureSpec::default()).unwrap();
            let c2 = check_condition2(m.as_ref(), &[t], &QuadratureSpec::default()).unwrap();
            assert!(c1.max_abs() < 1e-9, "{t}: {c1:?}");
            assert!(c2.max_abs() < 1e-9, "{t}: {c2:?}");
            assert!((density_mass(m.as_ref(), &[t], &QuadratureSpec::default()).unwrap() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn normal_future_is_bartlized() {
        let m = normal_location_future(1.5).unwrap();
        let c1 = check_condition1(m.as_ref(), &[0.7], &QuadratureSpec::default()).unwrap();
        let c2 = check_condition2(m.as_ref(), &[0.7], &QuadratureSpec::default()).unwrap();
        assert!(c1.max_abs() < 1e-9 && c2.max_abs() < 1e-9);
    }
}
