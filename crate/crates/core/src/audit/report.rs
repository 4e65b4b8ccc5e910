//! Per-θ audit reports, Monte Carlo residuals of the full identities, θ grids and
//! the transformation search.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::boundary::{check_boundary, FaceCheck};
use super::conditions::{check_condition1, check_condition2, ConditionMatrix, ConditionValue};
use crate::error::{HlikError, Result};
use crate::model::{h_derivatives, log_marg_derivatives, JointModel, ModelRef, ObservedData, ScaleLabel, ScaleMap, Transformed};
use crate::numeric::{map_replicates, McEstimate, QuadratureSpec, RngStream};

/// Monte Carlo mean and standard error of one matrix or vector entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub mean: f64,
    pub se: f64,
}

impl From<McEstimate> for Entry {
    fn from(e: McEstimate) -> Self {
        Self { mean: e.mean, se: e.se }
    }
}

impl Entry {
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.se + 1e-12
    }
}

/// Residuals of E[∂h/∂φ] = 0 and E[∂²h/∂φ² + (∂h/∂φ)(∂h/∂φ)ᵀ] = 0 over joint draws of
/// (y, v), with the blocks A (θθ), B (θv), C (vv) of the same second-order identity
/// for log f_θ(v) alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullIdentityResidual {
    pub n_obs: usize,
    pub n_mc: usize,
    pub score_mean: Vec<Entry>,
    pub second: Vec<Vec<Entry>>,
    pub block_a: Vec<Vec<Entry>>,
    pub block_b: Vec<Vec<Entry>>,
    pub block_c: Vec<Vec<Entry>>,
}

fn entries(draws: &[Vec<f64>], rows: usize, cols: usize) -> Result<Vec<Vec<Entry>>> {
    (0..rows)
        .map(|i| {
            (0..cols)
                .map(|j| {
                    let col: Vec<f64> = draws.iter().map(|d| d[i * cols + j]).collect();
                    Ok(McEstimate::from_values(&col)?.into())
                })
                .collect()
        })
        .collect()
}

pub fn check_full_identities(
    m: &dyn JointModel,
    theta: &[f64],
    n_obs: usize,
    n_mc: usize,
    stream: RngStream,
) -> Result<FullIdentityResidual> {
    if n_obs == 0 || n_mc < 2 {
        return Err(HlikError::InvalidInput("need n_obs ≥ 1 and n_mc ≥ 2".into()));
    }
    let p = m.theta_dim();
    let k = p + m.v_dim();
    let draws: Vec<Result<Vec<f64>>> = map_replicates(n_mc, stream, |_, rng| {
        let v = m.sample_v(theta, rng);
        let y = ObservedData::new(m.sample_y(theta, &v, n_obs, rng))?;
        let h = h_derivatives(m, theta, &v, &y)?;
        let g = log_marg_derivatives(m, theta, &v)?;
        let mut row = Vec::with_capacity(k + 2 * k * k);
        row.extend(h.grad.iter());
        for i in 0..k {
            for j in 0..k {
                row.push(h.hess[(i, j)] + h.grad[i] * h.grad[j]);
            }
        }
        for i in 0..k {
            for j in 0..k {
                row.push(g.hess[(i, j)] + g.grad[i] * g.grad[j]);
            }
        }
        Ok(row)
    });
    let draws: Vec<Vec<f64>> = draws.into_iter().collect::<Result<_>>()?;
    let score: Vec<Vec<f64>> = draws.iter().map(|d| d[..k].to_vec()).collect();
    let second: Vec<Vec<f64>> = draws.iter().map(|d| d[k..k + k * k].to_vec()).collect();
    let marg: Vec<Vec<f64>> = draws.iter().map(|d| d[k + k * k..].to_vec()).collect();
    let score_mean = entries(&score, 1, k)?.remove(0);
    let second = entries(&second, k, k)?;
    let marg = entries(&marg, k, k)?;
    let block = |r0: usize, r1: usize, c0: usize, c1: usize| -> Vec<Vec<Entry>> {
        marg[r0..r1].iter().map(|row| row[c0..c1].to_vec()).collect()
    };
    Ok(FullIdentityResidual {
        n_obs,
        n_mc,
        score_mean,
        second,
        block_a: block(0, p, 0, p),
        block_b: block(0, p, p, k),
        block_c: block(p, k, p, k),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Bartlized,
    FirstOnly,
    Fails,
    NotApplicable,
}

/// Band within which a numerically computed condition counts as zero.
pub fn identity_tolerance(quad_error: f64, mc_se: f64) -> f64 {
    1e-6_f64.max(5.0 * quad_error).max(3.0 * mc_se)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaAudit {
    pub theta: Vec<f64>,
    pub verdict: Verdict,
    pub cond1: Option<ConditionValue>,
    pub cond2: Option<ConditionMatrix>,
    pub tolerance1: Option<f64>,
    pub tolerance2: Option<f64>,
    pub boundary1: Vec<FaceCheck>,
    pub boundary2: Vec<FaceCheck>,
    pub full: Option<FullIdentityResidual>,
    pub note: Option<String>,
}

impl ThetaAudit {
    /// Largest absolute condition value, the ranking key of the transform search.
    pub fn worst_residual(&self) -> f64 {
        let a = self.cond1.as_ref().map_or(f64::INFINITY, ConditionValue::max_abs);
        let b = self.cond2.as_ref().map_or(f64::INFINITY, ConditionMatrix::max_abs);
        a.max(b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BartlettReport {
    pub model: String,
    pub v_scale: ScaleLabel,
    pub support_depends_on_theta: bool,
    pub grid: Vec<ThetaAudit>,
}

impl BartlettReport {
    /// Verdicts are per grid point; this is the weakest of them.
    pub fn weakest_verdict(&self) -> Verdict {
        let rank = |v: Verdict| match v {
            Verdict::Bartlized => 0,
            Verdict::FirstOnly => 1,
            Verdict::Fails => 2,
            Verdict::NotApplicable => 3,
        };
        self.grid
            .iter()
            .map(|g| g.verdict)
            .max_by_key(|v| rank(*v))
            .unwrap_or(Verdict::NotApplicable)
    }

    pub fn worst_residual(&self) -> f64 {
        self.grid.iter().map(ThetaAudit::worst_residual).fold(0.0, f64::max)
    }
}

/// Optional Monte Carlo part of an audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullIdentitySettings {
    pub n_obs: usize,
    pub n_mc: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AuditSettings {
    pub quadrature: QuadratureSpec,
    pub full: Option<FullIdentitySettings>,
}

fn audit_point(m: &dyn JointModel, theta: &[f64], settings: &AuditSettings, index: usize) -> Result<ThetaAudit> {
    if m.support_v_depends_on_theta() {
        return Ok(ThetaAudit {
            theta: theta.to_vec(),
            verdict: Verdict::NotApplicable,
            cond1: None,
            cond2: None,
            tolerance1: None,
            tolerance2: None,
            boundary1: Vec::new(),
            boundary2: Vec::new(),
            full: None,
            note: Some("support of v depends on θ".into()),
        });
    }
    let c1 = check_condition1(m, theta, &settings.quadrature)?;
    let c2 = check_condition2(m, theta, &settings.quadrature)?;
    let full = match settings.full {
        Some(f) => Some(check_full_identities(
            m,
            theta,
            f.n_obs,
            f.n_mc,
            RngStream::derive(f.seed, &format!("audit/{index}")),
        )?),
        None => None,
    };
    let tol1 = identity_tolerance(c1.max_error(), 0.0);
    let tol2 = identity_tolerance(c2.max_error(), 0.0);
    let first = c1.max_abs() < tol1;
    let second = c2.max_abs() < tol2;
    let verdict = match (first, second) {
        (true, true) => Verdict::Bartlized,
        (true, false) => Verdict::FirstOnly,
        _ => Verdict::Fails,
    };
    Ok(ThetaAudit {
        theta: theta.to_vec(),
        verdict,
        cond1: Some(c1),
        cond2: Some(c2),
        tolerance1: Some(tol1),
        tolerance2: Some(tol2),
        boundary1: check_boundary(m, theta, 1)?,
        boundary2: check_boundary(m, theta, 2)?,
        full,
        note: None,
    })
}

/// Audit the model at every grid point. Grid points run concurrently; the report
/// keeps grid order.
pub fn audit(m: &dyn JointModel, grid: &[Vec<f64>], settings: &AuditSettings) -> Result<BartlettReport> {
    if grid.is_empty() {
        return Err(HlikError::InvalidInput("empty θ grid".into()));
    }
    let support_theta = m.support_theta();
    for t in grid {
        if t.len() != m.theta_dim() || !support_theta.contains_interior(t) {
            return Err(HlikError::OutOfSupport(format!("grid point θ={t:?}")));
        }
    }
    let points: Vec<Result<ThetaAudit>> = grid
        .par_iter()
        .enumerate()
        .map(|(i, t)| audit_point(m, t, settings, i))
        .collect();
    Ok(BartlettReport {
        model: m.name(),
        v_scale: m.v_scale_label(),
        support_depends_on_theta: m.support_v_depends_on_theta(),
        grid: points.into_iter().collect::<Result<_>>()?,
    })
}

/// How grid points are spread over the declared θ range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaGrid {
    /// `count` points log-spaced across the model's θ range (linear when the range
    /// is not positive).
    Default { count: usize },
    Log { lower: f64, upper: f64, count: usize },
    Linear { lower: f64, upper: f64, count: usize },
    Points(Vec<f64>),
}

impl Default for ThetaGrid {
    fn default() -> Self {
        ThetaGrid::Default { count: 5 }
    }
}

fn spaced(lower: f64, upper: f64, count: usize, log: bool) -> Vec<f64> {
    if count == 1 {
        return vec![if log { (lower * upper).sqrt() } else { 0.5 * (lower + upper) }];
    }
    (0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            if log {
                (lower.ln() + t * (upper.ln() - lower.ln())).exp()
            } else {
                lower + t * (upper - lower)
            }
        })
        .collect()
}

impl ThetaGrid {
    /// Parse `default`, `default:N`, `log:LO:HI:N`, `lin:LO:HI:N` or a comma list.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || HlikError::InvalidInput(format!("cannot parse θ grid '{s}'"));
        let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad());
        let count = |x: &str| x.trim().parse::<usize>().ok().filter(|c| *c >= 1).ok_or_else(bad);
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["default"] => Ok(ThetaGrid::default()),
            ["default", c] => Ok(ThetaGrid::Default { count: count(c)? }),
            ["log", a, b, c] => Ok(ThetaGrid::Log {
                lower: num(a)?,
                upper: num(b)?,
                count: count(c)?,
            }),
            ["lin", a, b, c] => Ok(ThetaGrid::Linear {
                lower: num(a)?,
                upper: num(b)?,
                count: count(c)?,
            }),
            [list] => Ok(ThetaGrid::Points(
                list.split(',').map(num).collect::<Result<Vec<_>>>()?,
            )),
            _ => Err(bad()),
        }
    }

    /// Grid points for a model. Multi-parameter models get the points spread along
    /// the diagonal of the θ range box.
    pub fn points(&self, m: &dyn JointModel) -> Result<Vec<Vec<f64>>> {
        let range = m.theta_range();
        let per_axis = |count: usize| -> Vec<Vec<f64>> {
            range
                .axes
                .iter()
                .map(|a| spaced(a.lower, a.upper, count, a.lower > 0.0))
                .collect()
        };
        let transpose = |cols: Vec<Vec<f64>>, count: usize| -> Vec<Vec<f64>> {
            (0..count).map(|i| cols.iter().map(|c| c[i]).collect()).collect()
        };
        let grid = match self {
            ThetaGrid::Default { count } => transpose(per_axis(*count), *count),
            ThetaGrid::Log { lower, upper, count } => {
                if !(*lower > 0.0 && upper > lower) {
                    return Err(HlikError::InvalidInput("log grid needs 0 < lower < upper".into()));
                }
                let axis = spaced(*lower, *upper, *count, true);
                axis.into_iter().map(|t| vec![t; m.theta_dim()]).collect()
            }
            ThetaGrid::Linear { lower, upper, count } => {
                if !(upper > lower) {
                    return Err(HlikError::InvalidInput("linear grid needs lower < upper".into()));
                }
                let axis = spaced(*lower, *upper, *count, false);
                axis.into_iter().map(|t| vec![t; m.theta_dim()]).collect()
            }
            ThetaGrid::Points(ps) => {
                if ps.is_empty() || ps.len() % m.theta_dim() != 0 {
                    return Err(HlikError::InvalidInput(format!(
                        "point list length must be a multiple of dim θ = {}",
                        m.theta_dim()
                    )));
                }
                ps.chunks(m.theta_dim()).map(<[f64]>::to_vec).collect()
            }
        };
        Ok(grid)
    }
}

/// Catalog entries of the transformation search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformKind {
    Identity,
    Log,
    Logit,
}

impl TransformKind {
    pub const CATALOG: [TransformKind; 3] = [TransformKind::Identity, TransformKind::Log, TransformKind::Logit];

    pub fn name(self) -> &'static str {
        match self {
            TransformKind::Identity => "identity",
            TransformKind::Log => "log",
            TransformKind::Logit => "logit",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(TransformKind::Identity),
            "log" => Ok(TransformKind::Log),
            "logit" => Ok(TransformKind::Logit),
            other => Err(HlikError::InvalidInput(format!("unknown transform '{other}'"))),
        }
    }

    /// The model with this transform applied to every coordinate of v, or `None`
    /// when the support does not admit it.
    pub fn apply(self, m: &ModelRef) -> Option<ModelRef> {
        let probe: Vec<f64> = m.theta_range().axes.iter().map(|a| a.center()).collect();
        let axes = m.support_v(&probe).axes;
        let maps: Option<Vec<ScaleMap>> = match self {
            TransformKind::Identity => return Some(Arc::clone(m)),
            TransformKind::Log => Some(vec![ScaleMap::Log; axes.len()]),
            TransformKind::Logit => axes.iter().map(|a| ScaleMap::logit_for(*a).ok()).collect(),
        };
        let t = Transformed::new(Arc::clone(m), vec![ScaleMap::Identity; m.theta_dim()], maps?).ok()?;
        Some(Arc::new(t) as ModelRef)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BartlizeCandidate {
    pub transform: TransformKind,
    pub worst_residual: f64,
    pub report: BartlettReport,
}

/// Try every catalog transform; keep those Bartlized at every grid point, best first.
pub fn bartlize_search(
    m: &ModelRef,
    grid: &[Vec<f64>],
    catalog: &[TransformKind],
    settings: &AuditSettings,
) -> Result<Vec<BartlizeCandidate>> {
    let mut passing = Vec::new();
    for &kind in catalog {
        let Some(t) = kind.apply(m) else { continue };
        let report = match audit(t.as_ref(), grid, settings) {
            Ok(r) => r,
            Err(e) if e.is_input_error() => return Err(e),
            Err(_) => continue,
        };
        if report.grid.iter().all(|g| g.verdict == Verdict::Bartlized) {
            passing.push(BartlizeCandidate {
                transform: kind,
                worst_residual: report.worst_residual(),
                report,
            });
        }
    }
    if passing.is_empty() {
        return Err(HlikError::EmptyCatalogResult);
    }
    passing.sort_by(|a, b| a.worst_residual.total_cmp(&b.worst_residual));
    Ok(passing)
}
