//! Profile θ(v), the adjusted profile h-likelihood in v, and the three predictive
//! laws of a future observation on the ratio scale r = k·u.

use nalgebra::Cholesky;
use serde::{Deserialize, Serialize};

use super::closed_form::{FlatPrior, RatioPareto};
use super::grid::{build_grid, distance_on_grid, DensityGrid, Distance, GridSpec, HdpInterval, Spacing};
use crate::error::{HlikError, Result};
use crate::estimation::optimize::{maximize, Evaluation, NewtonSettings, OptimStatus, Problem};
use crate::model::{h_derivatives, h_raw, JointModel, ObservedData, ParamScale};
use crate::numeric::{gradient, integrate_1d_scaled, Interval, QuadratureSpec};

/// argmax_θ h(θ, v; y) by Newton, ignoring any closed form.
pub fn profile_theta_newton(m: &dyn JointModel, y: &ObservedData, v: &[f64]) -> Result<Vec<f64>> {
    let p = m.theta_dim();
    let objective = |t: &[f64]| -> Result<Evaluation> {
        let d = h_derivatives(m, t, v, y)?;
        Ok(Evaluation {
            value: d.value,
            grad: d.grad.rows(0, p).into_owned(),
            hess: d.hess.view((0, 0), (p, p)).into_owned(),
        })
    };
    let to_natural = |t: &[f64]| m.theta_to_natural(t);
    let problem = Problem {
        objective: &objective,
        bounds: m.support_theta(),
        theta_count: p,
        to_natural: &to_natural,
    };
    let out = maximize(&problem, &m.initial_guess(y).0, &NewtonSettings::default())?;
    match out.status {
        OptimStatus::Converged => Ok(out.x),
        OptimStatus::HessianNotPD => Err(HlikError::CurvatureNotPositive),
        OptimStatus::MaxIterations => Err(HlikError::MaxIterations(out.iterations)),
        _ => Err(HlikError::NoInteriorMode(format!("profile over θ: {}", out.message))),
    }
}

/// θ maximising h at fixed v; closed form when the model has one.
pub fn profile_theta(m: &dyn JointModel, y: &ObservedData, v: &[f64]) -> Result<Vec<f64>> {
    m.validate_data(y)?;
    match m.oracles().profile_theta {
        Some(f) => Ok(f(y, v)),
        None => profile_theta_newton(m, y, v),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aphl {
    pub value: f64,
    pub theta: Vec<f64>,
    /// D(h, θ) = det(−∂²h/∂θ²) at θ(v).
    pub curvature: f64,
}

/// h(θ(v), v; y) − ½ log D(h, θ) in the model's working parameterisation.
pub fn aphl(m: &dyn JointModel, y: &ObservedData, v: &[f64]) -> Result<Aphl> {
    let theta = profile_theta(m, y, v)?;
    let p = m.theta_dim();
    let d = h_derivatives(m, &theta, v, y)?;
    let neg = -d.hess.view((0, 0), (p, p)).into_owned();
    let curvature = if p == 1 {
        neg[(0, 0)]
    } else {
        Cholesky::new(neg.clone()).ok_or(HlikError::CurvatureNotPositive)?;
        neg.determinant()
    };
    if !(curvature > 0.0) {
        return Err(HlikError::CurvatureNotPositive);
    }
    Ok(Aphl {
        value: d.value - 0.5 * curvature.ln(),
        theta,
        curvature,
    })
}

fn grid_layout(support: Interval) -> Spacing {
    if support.lower.is_finite() && support.upper.is_infinite() {
        Spacing::Logarithmic { origin: support.lower }
    } else {
        Spacing::Uniform
    }
}

fn require_scalar_v(m: &dyn JointModel) -> Result<()> {
    if m.v_dim() == 1 {
        Ok(())
    } else {
        Err(HlikError::Unsupported("predictive grids need a one-dimensional v".into()))
    }
}

/// A predictive density on the model's v scale, and on the ratio scale when the model
/// defines one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveGrids {
    pub v: DensityGrid,
    pub r: Option<DensityGrid>,
}

/// Push a v-grid to r = k·u(v). The r grid is log-spaced, which matches the v grid
/// whenever log r is affine in the v working coordinate.
fn to_ratio_scale(m: &dyn JointModel, y: &ObservedData, v: &DensityGrid) -> Result<Option<DensityGrid>> {
    let Some(ratio) = m.oracles().ratio_scale else { return Ok(None) };
    let k = ratio(y);
    let r = v.pushforward(
        Interval::positive_half_line(),
        Spacing::Logarithmic { origin: 0.0 },
        |x| k * m.v_to_base(&[x])[0],
        |x| k.ln() + m.v_to_base_derivative(&[x])[0].ln(),
    )?;
    Ok(Some(r))
}

fn density_grids(
    m: &dyn JointModel,
    y: &ObservedData,
    log_f: &(dyn Fn(f64) -> Result<f64> + Sync),
    spec: &GridSpec,
) -> Result<PredictiveGrids> {
    let theta0 = m.initial_guess(y).0;
    let support = m.support_v(&theta0).axes[0];
    let start = m.initial_guess(y).1[0];
    let v = build_grid(support, grid_layout(support), log_f, start, spec)?;
    let r = to_ratio_scale(m, y, &v)?;
    Ok(PredictiveGrids { v, r })
}

/// f^H(v | y) ∝ exp(APHL(v)), renormalised on a grid.
pub fn h_distribution(m: &dyn JointModel, y: &ObservedData, spec: &GridSpec) -> Result<PredictiveGrids> {
    require_scalar_v(m)?;
    m.validate_data(y)?;
    density_grids(m, y, &|v| Ok(aphl(m, y, &[v])?.value), spec)
}

/// Exact sampling law of the pivot r, for models that have one.
pub fn pivotal_predictive(m: &dyn JointModel, y: &ObservedData) -> Result<RatioPareto> {
    m.validate_data(y)?;
    let f = m
        .oracles()
        .pivotal
        .ok_or_else(|| HlikError::Unsupported(format!("{} has no known pivot", m.name())))?;
    Ok(f(y))
}

/// Flat-prior posterior predictive of r in closed form.
pub fn posterior_predictive_flat(m: &dyn JointModel, y: &ObservedData, prior: FlatPrior) -> Result<RatioPareto> {
    m.validate_data(y)?;
    let f = m
        .oracles()
        .posterior_flat
        .ok_or_else(|| HlikError::Unsupported(format!("{} has no closed-form posterior predictive", m.name())))?;
    f(y, prior)
}

/// Posterior predictive by quadrature over θ:
/// f(v | y) ∝ ∫ exp{h(θ, v; y)} π(θ) dθ, with the prior flat in the natural parameter
/// (flat-lambda) or in its logarithm (flat-log-lambda), carried to the working scale.
pub fn posterior_predictive_numeric(
    m: &dyn JointModel,
    y: &ObservedData,
    prior: FlatPrior,
    quad: &QuadratureSpec,
    spec: &GridSpec,
) -> Result<PredictiveGrids> {
    require_scalar_v(m)?;
    m.validate_data(y)?;
    if m.theta_dim() != 1 {
        return Err(HlikError::Unsupported("numeric posterior predictive needs scalar θ".into()));
    }
    let theta_axis = m.support_theta().axes[0];
    let log_prior = |t: f64| -> Result<f64> {
        let nat = m.theta_to_natural(&[t])[0];
        let jac = gradient(|x: &[f64]| m.theta_to_natural(x)[0], &[t], None)?[0].abs();
        let base = match prior {
            FlatPrior::FlatLambda => 0.0,
            FlatPrior::FlatLogLambda if nat > 0.0 => -nat.ln(),
            FlatPrior::FlatLogLambda => {
                return Err(HlikError::InvalidInput("flat prior on log θ needs θ > 0".into()))
            }
        };
        Ok(base + jac.ln())
    };
    let log_f = |v: f64| -> Result<f64> {
        let (center, shift, scale) = match profile_theta(m, y, &[v]) {
            Ok(t) => {
                let d = h_derivatives(m, &t, &[v], y)?;
                let c = -d.hess[(0, 0)];
                (t[0], h_raw(m, &t, &[v], y) + log_prior(t[0])?, if c > 0.0 { c.sqrt().recip() } else { 1.0 })
            }
            Err(_) => {
                let t = m.initial_guess(y).0[0];
                (t, h_raw(m, &[t], &[v], y) + log_prior(t)?, 1.0)
            }
        };
        let integral = integrate_1d_scaled(
            |t| {
                if !theta_axis.contains_interior(t) {
                    return Ok(0.0);
                }
                let l = h_raw(m, &[t], &[v], y) + log_prior(t)? - shift;
                Ok(if l.is_nan() { 0.0 } else { l.exp() })
            },
            theta_axis,
            center,
            scale,
            quad,
        )
        .map_err(|e| match e {
            HlikError::NonConvergent(msg) => HlikError::ImproperPosterior(msg),
            other => other,
        })?;
        if !(integral.value > 0.0) || !integral.value.is_finite() {
            return Err(HlikError::ImproperPosterior(format!("posterior mass {} at v={v}", integral.value)));
        }
        Ok(integral.value.ln() + shift)
    };
    density_grids(m, y, &log_f, spec).map_err(|e| match e {
        HlikError::NonConvergent(msg) | HlikError::NoInteriorMode(msg) | HlikError::NonFinite(msg) => {
            HlikError::ImproperPosterior(msg)
        }
        other => other,
    })
}

/// Either a closed-form ratio law or a tabulated density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum PredictiveLaw {
    Closed(RatioPareto),
    Grid(DensityGrid),
}

impl PredictiveLaw {
    pub fn density(&self, x: f64) -> f64 {
        match self {
            PredictiveLaw::Closed(p) => p.density(x),
            PredictiveLaw::Grid(g) => g.density_at(x),
        }
    }
}

/// Highest-density predictive set of mass 1 − α. The closed-form Pareto laws are
/// decreasing on r ≥ 0, so the set is [0, c].
pub fn hdp_interval(law: &PredictiveLaw, alpha: f64) -> Result<HdpInterval> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(HlikError::InvalidInput(format!("α = {alpha} outside (0, 1]")));
    }
    match law {
        PredictiveLaw::Closed(p) => {
            let c = p.hdp_upper(alpha);
            Ok(HdpInterval {
                level: 1.0 - alpha,
                lo: 0.0,
                hi: c,
                c: Some(c),
                pieces: vec![(0.0, c)],
            })
        }
        PredictiveLaw::Grid(g) => g.hdp(alpha),
    }
}

/// The flat prior matching a working parameter scale.
pub fn prior_for_scale(scale: ParamScale) -> FlatPrior {
    match scale {
        ParamScale::Lambda => FlatPrior::FlatLambda,
        ParamScale::LogLambda => FlatPrior::FlatLogLambda,
    }
}

/// h-distribution, pivotal law and posterior predictive on a shared r grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveTriple {
    pub model: String,
    pub n: usize,
    pub param_scale: ParamScale,
    pub prior: FlatPrior,
    pub pivotal_law: RatioPareto,
    pub posterior_law: RatioPareto,
    pub h_grid: DensityGrid,
    pub pivotal: Vec<f64>,
    pub posterior: Vec<f64>,
    pub h_dist: Vec<f64>,
    pub h_vs_pivotal: Distance,
    pub h_vs_posterior: Distance,
    pub pivotal_vs_posterior: Distance,
}

impl PredictiveTriple {
    pub fn max_pairwise_sup(&self) -> f64 {
        self.h_vs_pivotal
            .sup_norm
            .max(self.h_vs_posterior.sup_norm)
            .max(self.pivotal_vs_posterior.sup_norm)
    }
}

/// Compare the three predictive laws. `m` must already be parameterised on
/// `param_scale`; the posterior uses the flat prior on that scale.
pub fn compare_triple(m: &dyn JointModel, y: &ObservedData, param_scale: ParamScale, spec: &GridSpec) -> Result<PredictiveTriple> {
    let prior = prior_for_scale(param_scale);
    let posterior_law = posterior_predictive_flat(m, y, prior)?;
    let pivotal_law = pivotal_predictive(m, y)?;
    let grids = h_distribution(m, y, spec)?;
    let h_grid = grids
        .r
        .ok_or_else(|| HlikError::Unsupported(format!("{} has no ratio scale", m.name())))?;
    let h_dist = h_grid.densities();
    let pivotal: Vec<f64> = h_grid.nodes.iter().map(|r| pivotal_law.density(*r)).collect();
    let posterior: Vec<f64> = h_grid.nodes.iter().map(|r| posterior_law.density(*r)).collect();
    Ok(PredictiveTriple {
        model: m.name(),
        n: y.n(),
        param_scale,
        prior,
        pivotal_law,
        posterior_law,
        h_vs_pivotal: distance_on_grid(&h_grid, &h_dist, &pivotal),
        h_vs_posterior: distance_on_grid(&h_grid, &h_dist, &posterior),
        pivotal_vs_posterior: distance_on_grid(&h_grid, &pivotal, &posterior),
        h_grid,
        pivotal,
        posterior,
        h_dist,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{exponential_future, normal_location_future, UnobservableScale};

    fn data(n: usize, mean: f64) -> ObservedData {
        let mut ys: Vec<f64> = (0..n).map(|i| 0.5 + i as f64).collect();
        let s: f64 = ys.iter().sum();
        for y in &mut ys {
            *y *= mean * n as f64 / s;
        }
        ObservedData::new(ys).unwrap()
    }

    #[test]
    fn profile_theta_closed_form_and_newton_agree() {
        let m = exponential_future(UnobservableScale::LogU, ParamScale::Lambda);
        assert!((profile_theta(m.as_ref(), &data(2, 1.0), &[0.0]).unwrap()[0] - 1.0).abs() < 1e-14);
        let y = data(4, 2.0);
        assert!((profile_theta(m.as_ref(), &y, &[2f64.ln()]).unwrap()[0] - 2.0).abs() < 1e-14);
        for &v in &[-1.0, 0.3, 2.0] {
            let a = profile_theta(m.as_ref(), &y, &[v]).unwrap()[0];
            let b = profile_theta_newton(m.as_ref(), &y, &[v]).unwrap()[0];
            assert!((a - b).abs() < 1e-9 * a);
        }
        let n = normal_location_future(1.0).unwrap();
        let t = profile_theta_newton(n.as_ref(), &y, &[0.4]).unwrap();
        let g = h_derivatives(n.as_ref(), &t, &[0.4], &y).unwrap().grad[0];
        assert!(g.abs() < 1e-8);
    }

    #[test]
    fn aphl_curvatures() {
        let y = data(5, 1.3);
        let lam = exponential_future(UnobservableScale::LogU, ParamScale::Lambda);
        let eta = exponential_future(UnobservableScale::LogU, ParamScale::LogLambda);
        for &v in &[-0.5, 0.2, 1.5] {
            let a = aphl(lam.as_ref(), &y, &[v]).unwrap();
            let l = a.theta[0];
            assert!((a.curvature - 6.0 / (l * l)).abs() < 1e-10 * a.curvature);
            let b = aphl(eta.as_ref(), &y, &[v]).unwrap();
            assert!((b.curvature - 6.0).abs() < 1e-10);
            // log-λ minus λ adjustment is −log λ(v) up to a constant
            let gap = b.value - a.value + l.ln();
            let gap0 = {
                let a0 = aphl(lam.as_ref(), &y, &[0.0]).unwrap();
                aphl(eta.as_ref(), &y, &[0.0]).unwrap().value - a0.value + a0.theta[0].ln()
            };
            assert!((gap - gap0).abs() < 1e-10);
        }
    }

    #[test]
    fn h_distribution_matches_pareto_laws() {
        for &n in &[2usize, 10] {
            let y = data(n, 1.7);
            for (scale, order) in [(ParamScale::Lambda, n as f64), (ParamScale::LogLambda, n as f64 + 1.0)] {
                let m = exponential_future(UnobservableScale::LogU, scale);
                let g = h_distribution(m.as_ref(), &y, &GridSpec::default()).unwrap().r.unwrap();
                let law = RatioPareto::new(n, order).unwrap();
                let sup = g
                    .nodes
                    .iter()
                    .zip(g.densities())
                    .fold(0.0_f64, |a, (r, f)| a.max((f - law.density(*r)).abs()));
                assert!(sup < 1e-6, "n={n} {scale:?}: {sup}");
                assert!((g.mass() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn natural_u_scale_gives_the_same_h_distribution() {
        let y = data(6, 0.8);
        let m = exponential_future(UnobservableScale::NaturalU, ParamScale::LogLambda);
        let g = h_distribution(m.as_ref(), &y, &GridSpec::default()).unwrap().r.unwrap();
        let law = RatioPareto::pivotal(6);
        let sup = g
            .nodes
            .iter()
            .zip(g.densities())
            .fold(0.0_f64, |a, (r, f)| a.max((f - law.density(*r)).abs()));
        assert!(sup < 1e-6, "{sup}");
    }

    #[test]
    fn numeric_posterior_matches_closed_form() {
        let y = data(3, 1.2);
        let m = exponential_future(UnobservableScale::LogU, ParamScale::Lambda);
        for prior in [FlatPrior::FlatLambda, FlatPrior::FlatLogLambda] {
            let g = posterior_predictive_numeric(m.as_ref(), &y, prior, &QuadratureSpec::default(), &GridSpec { nodes: 401, ..GridSpec::default() })
                .unwrap()
                .r
                .unwrap();
            let law = posterior_predictive_flat(m.as_ref(), &y, prior).unwrap();
            let sup = g
                .nodes
                .iter()
                .zip(g.densities())
                .fold(0.0_f64, |a, (r, f)| a.max((f - law.density(*r)).abs()));
            assert!(sup < 1e-5, "{prior:?}: {sup}");
        }
        let y1 = data(1, 1.0);
        assert!(matches!(
            posterior_predictive_numeric(m.as_ref(), &y1, FlatPrior::FlatLambda, &QuadratureSpec::default(), &GridSpec { nodes: 201, ..GridSpec::default() }),
            Err(HlikError::ImproperPosterior(_))
        ));
    }

    #[test]
    fn triple_on_both_scales() {
        let y = data(5, 2.0);
        let lam = exponential_future(UnobservableScale::LogU, ParamScale::Lambda);
        let t = compare_triple(lam.as_ref(), &y, ParamScale::Lambda, &GridSpec::default()).unwrap();
        assert!(t.h_vs_posterior.sup_norm < 1e-6);
        assert!(t.h_vs_pivotal.sup_norm > 1e-2);
        let eta = exponential_future(UnobservableScale::LogU, ParamScale::LogLambda);
        let t = compare_triple(eta.as_ref(), &y, ParamScale::LogLambda, &GridSpec::default()).unwrap();
        assert!(t.max_pairwise_sup() < 1e-6);
    }

    #[test]
    fn hdp_closed_form() {
        let law = PredictiveLaw::Closed(RatioPareto::pivotal(10));
        let h = hdp_interval(&law, 0.05).unwrap();
        assert_eq!(h.lo, 0.0);
        assert!((h.hi - 3.4934).abs() < 1e-3);
        assert_eq!(hdp_interval(&law, 1.0).unwrap().hi, 0.0);
    }

    #[test]
    fn models_without_pivot_are_unsupported() {
        let n = normal_location_future(1.0).unwrap();
        assert!(matches!(pivotal_predictive(n.as_ref(), &data(3, 1.0)), Err(HlikError::Unsupported(_))));
    }
}
