//! Frequentist coverage of prediction sets for the unobservable.

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Method};
use crate::error::{HlikError, Result};
use crate::estimation::{expected_hessian, inverse_information, solve_mhle, ExpectedHessianMethod, MhleStatus};
use crate::model::{JointModel, ObservedData};
use crate::numeric::special::standard_normal_quantile;
use crate::numeric::{map_replicates, RngStream};
use crate::prediction::{
    h_distribution, hdp_interval, pivotal_predictive, posterior_predictive_flat, prior_for_scale, GridSpec,
    PredictiveLaw,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CoverageRow {
    pub method: Method,
    pub n: usize,
    pub alpha: f64,
    pub nominal: f64,
    pub coverage: f64,
    /// √(p(1−p)/N)
    pub se: f64,
    /// Mean width of the set on the natural scale of the unobservable.
    pub mean_width: f64,
    pub replications: usize,
}

impl CoverageRow {
    pub fn within(&self, k: f64) -> bool {
        (self.coverage - self.nominal).abs() <= k * self.se
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub config: ExperimentConfig,
    pub rows: Vec<CoverageRow>,
}

impl CoverageResult {
    pub fn row(&self, method: Method, n: usize, alpha: f64) -> Option<&CoverageRow> {
        self.rows.iter().find(|r| r.method == method && r.n == n && r.alpha == alpha)
    }
}

/// A prediction set as a union of intervals on the natural scale of u.
#[derive(Debug, Clone, PartialEq)]
struct PredictionSet {
    pieces: Vec<(f64, f64)>,
}

impl PredictionSet {
    fn contains(&self, u: f64) -> bool {
        self.pieces.iter().any(|(a, b)| u >= *a && u <= *b)
    }
    fn width(&self) -> f64 {
        self.pieces.iter().map(|(a, b)| b - a).sum()
    }
}

fn ratio_k(m: &dyn JointModel, y: &ObservedData) -> Result<f64> {
    let f = m
        .oracles()
        .ratio_scale
        .ok_or_else(|| HlikError::Unsupported(format!("{} has no ratio scale", m.name())))?;
    Ok(f(y))
}

fn law_sets(law: &PredictiveLaw, k: f64, alphas: &[f64]) -> Result<Vec<PredictionSet>> {
    alphas
        .iter()
        .map(|a| {
            let h = hdp_interval(law, *a)?;
            Ok(PredictionSet {
                pieces: h.pieces.iter().map(|(lo, hi)| (lo / k, hi / k)).collect(),
            })
        })
        .collect()
}

/// Sets for every α for one dataset.
fn method_sets(
    m: &dyn JointModel,
    y: &ObservedData,
    method: Method,
    cfg: &ExperimentConfig,
    spec: &GridSpec,
) -> Result<Vec<PredictionSet>> {
    match method {
        Method::Pivotal => {
            let law = PredictiveLaw::Closed(pivotal_predictive(m, y)?);
            law_sets(&law, ratio_k(m, y)?, &cfg.alphas)
        }
        Method::PosteriorFlat => {
            let law = PredictiveLaw::Closed(posterior_predictive_flat(m, y, prior_for_scale(cfg.param_scale))?);
            law_sets(&law, ratio_k(m, y)?, &cfg.alphas)
        }
        Method::Aphl => {
            let grids = h_distribution(m, y, spec)?;
            match grids.r {
                Some(r) => law_sets(&PredictiveLaw::Grid(r), ratio_k(m, y)?, &cfg.alphas),
                None => cfg
                    .alphas
                    .iter()
                    .map(|a| {
                        let h = grids.v.hdp(*a)?;
                        let pieces = h
                            .pieces
                            .iter()
                            .map(|(lo, hi)| (m.v_to_base(&[*lo])[0], m.v_to_base(&[*hi])[0]))
                            .collect();
                        Ok(PredictionSet { pieces })
                    })
                    .collect(),
            }
        }
        Method::HessianNormal => {
            let sol = solve_mhle(m, y, None)?;
            if sol.status != MhleStatus::Converged {
                return Err(HlikError::NoInteriorMode(sol.message));
            }
            let info = match &sol.expected_hessian {
                Some(e) => crate::estimation::from_rows(e),
                None => expected_hessian(m, &sol.theta.values, y.n(), ExpectedHessianMethod::ClosedForm)?.matrix(),
            };
            let inv = inverse_information(&info)
                .inverse
                .ok_or_else(|| HlikError::NotApplicable("expected Hessian is not positive definite".into()))?;
            let p = m.theta_dim();
            let tau = inv[p][p].sqrt();
            let vhat = sol.v.values[0];
            Ok(cfg
                .alphas
                .iter()
                .map(|a| {
                    let z = standard_normal_quantile(1.0 - a / 2.0);
                    let lo = m.v_to_base(&[vhat - z * tau])[0];
                    let hi = m.v_to_base(&[vhat + z * tau])[0];
                    PredictionSet { pieces: vec![(lo.min(hi), lo.max(hi))] }
                })
                .collect())
        }
    }
}

/// Per replicate, per method, per α: (covered, width).
type ReplicateOutcome = Vec<Vec<(bool, f64)>>;

/// Draw N datasets with their future value from f(y, v | θ) for each sample size,
/// build every method's 1 − α set and tally coverage. Replicate i of sample size n
/// uses stream i of the experiment seed derived for n, so results do not depend on
/// the worker count.
pub fn run_coverage(cfg: &ExperimentConfig) -> Result<CoverageResult> {
    cfg.validate()?;
    if cfg.theta.len() != 1 {
        return Err(HlikError::Unsupported("coverage needs a scalar θ".into()));
    }
    let m = cfg.build_model()?;
    if m.v_dim() != 1 {
        return Err(HlikError::Unsupported("coverage needs a scalar unobservable".into()));
    }
    let theta = cfg.working_theta();
    let spec = cfg.grid_spec();
    let nn = cfg.replications as f64;
    let mut rows = Vec::new();
    for &n in &cfg.sample_sizes {
        let base = RngStream::derive(cfg.seed, &format!("coverage/n={n}"));
        let outcomes: Vec<Result<ReplicateOutcome>> = map_replicates(cfg.replications, base, |_, rng| {
            let v = m.sample_v(&theta, rng);
            let y = ObservedData::new(m.sample_y(&theta, &v, n, rng))?;
            let u = m.v_to_base(&v)[0];
            cfg.methods
                .iter()
                .map(|method| {
                    let sets = method_sets(m.as_ref(), &y, *method, cfg, &spec)?;
                    Ok(sets.iter().map(|s| (s.contains(u), s.width())).collect())
                })
                .collect()
        });
        let outcomes: Vec<ReplicateOutcome> = outcomes.into_iter().collect::<Result<_>>()?;
        for (mi, method) in cfg.methods.iter().enumerate() {
            for (ai, alpha) in cfg.alphas.iter().enumerate() {
                let hits = outcomes.iter().filter(|o| o[mi][ai].0).count();
                let width: f64 = outcomes.iter().map(|o| o[mi][ai].1).sum::<f64>() / nn;
                let p = hits as f64 / nn;
                rows.push(CoverageRow {
                    method: *method,
                    n,
                    alpha: *alpha,
                    nominal: 1.0 - alpha,
                    coverage: p,
                    se: (p * (1.0 - p) / nn).sqrt(),
                    mean_width: width,
                    replications: cfg.replications,
                });
            }
        }
    }
    Ok(CoverageResult { config: cfg.clone(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ParamScale;

    #[test]
    fn pivotal_coverage_is_nominal() {
        let mut cfg = ExperimentConfig::new(11);
        cfg.replications = 4000;
        cfg.sample_sizes = vec![10];
        cfg.alphas = vec![0.1, 0.5];
        let r = run_coverage(&cfg).unwrap();
        for row in &r.rows {
            assert!(row.within(3.0), "{row:?}");
            assert!((row.se - (row.coverage * (1.0 - row.coverage) / 4000.0).sqrt()).abs() < 1e-15);
        }
        // c(0.1, 10)·E[ȳ] with λ = 1
        let c = crate::prediction::hdp_multiplier(0.1, 10);
        assert!((r.row(Method::Pivotal, 10, 0.1).unwrap().mean_width - c).abs() < 0.05 * c);
    }

    #[test]
    fn hessian_normal_undercovers() {
        let mut cfg = ExperimentConfig::new(5);
        cfg.replications = 2000;
        cfg.alphas = vec![0.05];
        cfg.methods = vec![Method::HessianNormal, Method::Pivotal];
        let r = run_coverage(&cfg).unwrap();
        let h = r.row(Method::HessianNormal, 10, 0.05).unwrap();
        assert!(h.coverage < 0.95 - 3.0 * h.se, "{h:?}");
    }

    #[test]
    fn aphl_and_posterior_match_pivotal_on_log_scale() {
        let mut cfg = ExperimentConfig::new(3);
        cfg.replications = 200;
        cfg.sample_sizes = vec![4];
        cfg.alphas = vec![0.2];
        cfg.grid_nodes = 401;
        cfg.methods = vec![Method::Pivotal, Method::PosteriorFlat, Method::Aphl];
        let r = run_coverage(&cfg).unwrap();
        let p = r.rows[0].coverage;
        assert_eq!(r.rows[1].coverage, p);
        assert!((r.rows[2].coverage - p).abs() <= 0.01);
        assert!((r.rows[2].mean_width - r.rows[0].mean_width).abs() < 1e-3 * r.rows[0].mean_width);
    }

    #[test]
    fn flat_lambda_posterior_with_one_observation_is_improper() {
        let mut cfg = ExperimentConfig::new(3);
        cfg.replications = 100;
        cfg.sample_sizes = vec![1];
        cfg.param_scale = ParamScale::Lambda;
        cfg.methods = vec![Method::PosteriorFlat];
        assert!(matches!(run_coverage(&cfg), Err(HlikError::ImproperPosterior(_))));
    }

    #[test]
    fn results_do_not_depend_on_worker_count() {
        let mut cfg = ExperimentConfig::new(8);
        cfg.replications = 500;
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| run_coverage(&cfg).unwrap());
        let b = four.install(|| run_coverage(&cfg).unwrap());
        assert_eq!(a, b);
    }
}
