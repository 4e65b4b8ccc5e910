//! Moment studies for the exponential future-observation model: the remainder term
//! of the score expansion, the variance of v̂ − v against the Hessian formula, and
//! the two variance decompositions of the prediction error.
//!
//! With y_1..y_n ~ Exp(mean λ) only ȳ enters, so each replicate draws n·ȳ from
//! Gamma(n, λ) directly.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{HlikError, Result};
use crate::estimation::{expected_hessian, inverse_information, ExpectedHessianMethod};
use crate::model::{exponential_future, ParamScale, UnobservableScale};
use crate::numeric::special::{digamma, standard_normal_pdf, trigamma};
use crate::numeric::{map_replicates, McEstimate, RngStream, VarianceEstimate};
use crate::prediction::FlatPrior;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
pub const PI2_OVER_6: f64 = std::f64::consts::PI * std::f64::consts::PI / 6.0;

fn default_replications() -> usize {
    1_000_000
}
fn default_lambda() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct MomentConfig {
    #[serde(alias = "n")]
    pub sample_sizes: Vec<usize>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    pub seed: u64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

impl MomentConfig {
    pub fn new(sample_sizes: Vec<usize>, replications: usize, seed: u64) -> Self {
        Self {
            sample_sizes,
            replications,
            seed,
            lambda: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 100 {
            return Err(HlikError::InvalidInput(format!(
                "replications must be at least 100, got {}",
                self.replications
            )));
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.contains(&0) {
            return Err(HlikError::InvalidInput("sample sizes must be positive".into()));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(HlikError::InvalidInput(format!("λ = {} must be positive", self.lambda)));
        }
        Ok(())
    }
}

/// (ȳ, y_{n+1}) under Exp(mean λ).
fn draw_pair<R: Rng + ?Sized>(n: usize, lambda: f64, rng: &mut R) -> (f64, f64) {
    let total: f64 = Gamma::new(n as f64, lambda).expect("positive shape").sample(rng);
    let xi: f64 = Exp1.sample(rng);
    (total / n as f64, lambda * xi)
}

/// R_{v,n} and Z_{v,n} for one replicate.
pub fn r_and_z(ybar: f64, future: f64, lambda: f64) -> (f64, f64) {
    let g = |x: f64| (x / lambda).ln() - (x - lambda) / lambda;
    (g(ybar) - g(future), (ybar - future) / lambda)
}

/// E[R_{v,n}] = ψ(n) − log n + γ.
pub fn exact_mean_r(n: usize) -> f64 {
    digamma(n as f64) - (n as f64).ln() + EULER_GAMMA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RTermRow {
    pub n: usize,
    pub mean_r: McEstimate,
    pub var_r: VarianceEstimate,
    pub mean_abs_r: McEstimate,
    pub mean_z: McEstimate,
    pub var_z: VarianceEstimate,
    pub exact_mean_r: f64,
}

/// Limits as n → ∞: R_∞ = ξ − 1 − log ξ and Z_∞ = 1 − ξ with ξ ~ Exp(1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitLaw {
    pub mean_r_inf: McEstimate,
    pub var_log_y: VarianceEstimate,
    pub euler_gamma: f64,
    pub pi2_over_6: f64,
    /// Density of Z_∞ at z = 1, which is e^0.
    pub z_density_at_one: f64,
    /// Ratio of that density to the standard normal density at 1.
    pub z_to_normal_ratio_at_one: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RTermStudy {
    pub config: MomentConfig,
    pub rows: Vec<RTermRow>,
    pub limit: LimitLaw,
}

pub fn limit_law(replications: usize, seed: u64) -> Result<LimitLaw> {
    let draws: Vec<(f64, f64)> = map_replicates(replications, RngStream::derive(seed, "rterm/limit"), |_, rng| {
        let xi: f64 = Exp1.sample(rng);
        (xi - 1.0 - xi.ln(), xi.ln())
    });
    let r: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let logs: Vec<f64> = draws.iter().map(|d| d.1).collect();
    Ok(LimitLaw {
        mean_r_inf: McEstimate::from_values(&r)?,
        var_log_y: VarianceEstimate::from_values(&logs)?,
        euler_gamma: EULER_GAMMA,
        pi2_over_6: PI2_OVER_6,
        z_density_at_one: 1.0,
        z_to_normal_ratio_at_one: 1.0 / standard_normal_pdf(1.0),
    })
}

/// Monte Carlo distribution summaries of R_{v,n} and Z_{v,n} at each n.
pub fn r_term_study(cfg: &MomentConfig) -> Result<RTermStudy> {
    cfg.validate()?;
    let lambda = cfg.lambda;
    let mut rows = Vec::with_capacity(cfg.sample_sizes.len());
    for &n in &cfg.sample_sizes {
        let base = RngStream::derive(cfg.seed, &format!("rterm/n={n}"));
        let draws: Vec<(f64, f64)> = map_replicates(cfg.replications, base, |_, rng| {
            let (ybar, future) = draw_pair(n, lambda, rng);
            r_and_z(ybar, future, lambda)
        });
        let r: Vec<f64> = draws.iter().map(|d| d.0).collect();
        let z: Vec<f64> = draws.iter().map(|d| d.1).collect();
        let abs_r: Vec<f64> = r.iter().map(|x| x.abs()).collect();
        rows.push(RTermRow {
            n,
            mean_r: McEstimate::from_values(&r)?,
            var_r: VarianceEstimate::from_values(&r)?,
            mean_abs_r: McEstimate::from_values(&abs_r)?,
            mean_z: McEstimate::from_values(&z)?,
            var_z: VarianceEstimate::from_values(&z)?,
            exact_mean_r: exact_mean_r(n),
        });
    }
    Ok(RTermStudy {
        config: cfg.clone(),
        rows,
        limit: limit_law(cfg.replications, cfg.seed)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownRow {
    pub n: usize,
    /// Monte Carlo V(v̂ − v).
    pub variance: VarianceEstimate,
    /// Hessian-based τ²_v from the inverse expected Hessian.
    pub tau2_v: f64,
    pub excess: f64,
    pub excess_target: f64,
    /// ψ'(n) + π²/6.
    pub exact_variance: f64,
    /// Monte Carlo Cov(λ̂, v̂ − v).
    pub covariance: McEstimate,
    /// Hessian-based τ_{λ,v}.
    pub tau_lambda_v: f64,
}

impl BreakdownRow {
    pub fn excess_within(&self, k: f64) -> bool {
        (self.excess - self.excess_target).abs() <= k * self.variance.se
    }
}

/// V(v̂ − v) against τ²_v, and Cov(λ̂, v̂ − v) against τ_{λ,v}, on the log-u scale.
pub fn variance_breakdown(cfg: &MomentConfig) -> Result<Vec<BreakdownRow>> {
    cfg.validate()?;
    let lambda = cfg.lambda;
    let m = exponential_future(UnobservableScale::LogU, ParamScale::Lambda);
    let mut rows = Vec::with_capacity(cfg.sample_sizes.len());
    for &n in &cfg.sample_sizes {
        let info = expected_hessian(m.as_ref(), &[lambda], n, ExpectedHessianMethod::ClosedForm)?.matrix();
        let inv = inverse_information(&info)
            .inverse
            .ok_or_else(|| HlikError::NotApplicable("expected Hessian is not positive definite".into()))?;
        let base = RngStream::derive(cfg.seed, &format!("breakdown/n={n}"));
        let draws: Vec<(f64, f64)> = map_replicates(cfg.replications, base, |_, rng| {
            let (ybar, future) = draw_pair(n, lambda, rng);
            (ybar, ybar.ln() - future.ln())
        });
        let err: Vec<f64> = draws.iter().map(|d| d.1).collect();
        let variance = VarianceEstimate::from_values(&err)?;
        let mean_l = draws.iter().map(|d| d.0).sum::<f64>() / draws.len() as f64;
        let mean_e = err.iter().sum::<f64>() / err.len() as f64;
        let nn = draws.len() as f64;
        let products: Vec<f64> = draws
            .iter()
            .map(|(l, e)| (l - mean_l) * (e - mean_e) * nn / (nn - 1.0))
            .collect();
        rows.push(BreakdownRow {
            n,
            tau2_v: inv[1][1],
            excess: variance.variance - inv[1][1],
            excess_target: PI2_OVER_6 - 1.0,
            exact_variance: trigamma(n as f64) + PI2_OVER_6,
            covariance: McEstimate::from_values(&products)?,
            tau_lambda_v: inv[0][1],
            variance,
        });
    }
    Ok(rows)
}

/// A value with its Monte Carlo standard error (0 for closed forms).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub value: f64,
    pub se: f64,
}

impl Term {
    pub fn exact(value: f64) -> Self {
        Self { value, se: 0.0 }
    }
}

/// V(v̂ − v | ·) = E[τ | ·] + V[e | ·], with τ = V(v | θ) and e = v̂ − E(v | θ, y).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualitySide {
    pub mean_term: Term,
    pub variance_term: Term,
    pub total: Term,
}

impl DualitySide {
    pub fn imbalance(&self) -> f64 {
        self.total.value - self.mean_term.value - self.variance_term.value
    }

    /// Components add up to the total within k combined standard errors.
    pub fn balanced(&self, k: f64) -> bool {
        let se = (self.total.se.powi(2) + self.mean_term.se.powi(2) + self.variance_term.se.powi(2)).sqrt();
        self.imbalance().abs() <= k * se + 1e-12
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityRow {
    pub n: usize,
    /// Posterior side under the flat prior, closed form.
    pub posterior: DualitySide,
    /// Posterior side by simulation from the posterior.
    pub posterior_mc: DualitySide,
    /// Sampling side by simulation from f(y, v | λ).
    pub sampling: DualitySide,
    /// posterior − sampling, per component.
    pub gap_mean: Term,
    pub gap_variance: Term,
    pub gap_total: Term,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityResult {
    pub config: MomentConfig,
    pub prior: FlatPrior,
    pub rows: Vec<DualityRow>,
}

fn posterior_shape(n: usize, prior: FlatPrior) -> Result<f64> {
    let a = match prior {
        FlatPrior::FlatLambda => n as f64 - 1.0,
        FlatPrior::FlatLogLambda => n as f64,
    };
    if a > 0.0 {
        Ok(a)
    } else {
        Err(HlikError::ImproperPosterior(format!("flat prior on λ with n = {n}")))
    }
}

fn mc_side(draws: &[(f64, f64)]) -> Result<DualitySide> {
    let e: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let total: Vec<f64> = draws.iter().map(|d| d.1).collect();
    let ve = VarianceEstimate::from_values(&e)?;
    let vt = VarianceEstimate::from_values(&total)?;
    Ok(DualitySide {
        mean_term: Term::exact(PI2_OVER_6),
        variance_term: Term { value: ve.variance, se: ve.se },
        total: Term { value: vt.variance, se: vt.se },
    })
}

/// Both decompositions of the prediction-error variance on the log-u scale.
/// Given λ, τ = V(log y_{n+1} | λ) = π²/6 and e = log ȳ − log λ + γ.
/// Under the flat prior λ | y is inverse gamma with shape n − 1 (flat in λ) or n
/// (flat in log λ), so V[e | y] = ψ'(shape).
pub fn duality_check(cfg: &MomentConfig, prior: FlatPrior) -> Result<DualityResult> {
    cfg.validate()?;
    let lambda = cfg.lambda;
    let mut rows = Vec::with_capacity(cfg.sample_sizes.len());
    for &n in &cfg.sample_sizes {
        let shape = posterior_shape(n, prior)?;
        let posterior = DualitySide {
            mean_term: Term::exact(PI2_OVER_6),
            variance_term: Term::exact(trigamma(shape)),
            total: Term::exact(PI2_OVER_6 + trigamma(shape)),
        };
        let sampling_draws: Vec<(f64, f64)> =
            map_replicates(cfg.replications, RngStream::derive(cfg.seed, &format!("duality/sampling/n={n}")), |_, rng| {
                let (ybar, future) = draw_pair(n, lambda, rng);
                (ybar.ln() - lambda.ln() + EULER_GAMMA, ybar.ln() - future.ln())
            });
        // one fixed dataset; the posterior of log λ shifts with ȳ but keeps its shape
        let ybar = lambda;
        let total_y = n as f64 * ybar;
        let posterior_draws: Vec<(f64, f64)> =
            map_replicates(cfg.replications, RngStream::derive(cfg.seed, &format!("duality/posterior/n={n}")), |_, rng| {
                let g: f64 = Gamma::new(shape, 1.0).expect("positive shape").sample(rng);
                let lam = total_y / g;
                let xi: f64 = Exp1.sample(rng);
                let v = lam.ln() + xi.ln();
                (ybar.ln() - lam.ln() + EULER_GAMMA, ybar.ln() - v)
            });
        let sampling = mc_side(&sampling_draws)?;
        let posterior_mc = mc_side(&posterior_draws)?;
        let gap = |a: Term, b: Term| Term {
            value: a.value - b.value,
            se: (a.se * a.se + b.se * b.se).sqrt(),
        };
        rows.push(DualityRow {
            n,
            gap_mean: gap(posterior.mean_term, sampling.mean_term),
            gap_variance: gap(posterior.variance_term, sampling.variance_term),
            gap_total: gap(posterior.total, sampling.total),
            posterior,
            posterior_mc,
            sampling,
        });
    }
    Ok(DualityResult {
        config: cfg.clone(),
        prior,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::{r_term_decomposition, solve_mhle};
    use crate::model::ObservedData;

    #[test]
    fn closed_form_remainder_matches_the_generic_decomposition() {
        let m = exponential_future(UnobservableScale::LogU, ParamScale::Lambda);
        for (ys, lam, fut) in [(vec![0.3, 2.0, 1.1], 1.0, 0.4), (vec![5.0, 1.0], 2.5, 7.0)] {
            let y = ObservedData::new(ys).unwrap();
            let sol = solve_mhle(m.as_ref(), &y, None).unwrap();
            let rt = r_term_decomposition(m.as_ref(), &y, &[lam], &[f64::ln(fut)], &sol).unwrap();
            let (r, z) = r_and_z(y.mean(), fut, lam);
            assert!((rt.remainder[1] - r).abs() < 1e-9, "{rt:?} vs {r}");
            assert!((rt.leading[1] - z).abs() < 1e-9);
            assert!(rt.remainder[0].abs() < 1e-9);
        }
    }

    #[test]
    fn exact_mean_of_remainder_tends_to_euler_gamma() {
        assert!(exact_mean_r(1).abs() < 1e-12);
        assert!((exact_mean_r(10_000) - EULER_GAMMA).abs() < 1e-4);
    }

    #[test]
    fn r_term_study_small() {
        let cfg = MomentConfig::new(vec![3, 200], 40_000, 9);
        let s = r_term_study(&cfg).unwrap();
        for row in &s.rows {
            assert!(row.mean_r.within(row.exact_mean_r, 4.0), "{row:?}");
            assert!(row.mean_z.within(0.0, 4.0));
            // V(Z_{v,n}) = 1/n + 1
            assert!(row.var_z.within(1.0 + 1.0 / row.n as f64, 4.0));
        }
        assert!(s.limit.mean_r_inf.within(EULER_GAMMA, 4.0));
        assert!(s.limit.var_log_y.within(PI2_OVER_6, 4.0));
        assert!((s.limit.z_to_normal_ratio_at_one - 4.1327).abs() < 1e-4);
    }

    #[test]
    fn breakdown_and_covariance() {
        let cfg = MomentConfig::new(vec![20], 100_000, 4);
        let row = &variance_breakdown(&cfg).unwrap()[0];
        assert!((row.tau2_v - 1.05).abs() < 1e-12);
        assert!((row.tau_lambda_v - 0.05).abs() < 1e-12);
        assert!(row.variance.within(row.exact_variance, 4.0));
        assert!(row.covariance.within(0.05, 4.0));
    }

    #[test]
    fn duality_sides_balance_and_log_prior_gap_vanishes() {
        let cfg = MomentConfig::new(vec![5, 20], 50_000, 2);
        let d = duality_check(&cfg, FlatPrior::FlatLogLambda).unwrap();
        for row in &d.rows {
            assert!(row.posterior.balanced(1.0));
            assert!(row.sampling.balanced(3.0), "{row:?}");
            assert!(row.posterior_mc.balanced(3.0));
            assert!(row.posterior_mc.total.value - row.posterior.total.value <= 4.0 * row.posterior_mc.total.se);
            assert!(row.gap_variance.value.abs() <= 4.0 * row.gap_variance.se);
        }
        let d = duality_check(&cfg, FlatPrior::FlatLambda).unwrap();
        // ψ'(n−1) − ψ'(n) = 1/(n−1)²
        assert!((d.rows[0].posterior.variance_term.value - trigamma(5.0) - 1.0 / 16.0).abs() < 1e-12);
        let one = MomentConfig::new(vec![1], 100, 2);
        assert!(matches!(duality_check(&one, FlatPrior::FlatLambda), Err(HlikError::ImproperPosterior(_))));
    }
}
