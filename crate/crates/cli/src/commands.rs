use std::path::Path;

use hlik_core::audit::{audit, bartlize_search, AuditSettings, FullIdentitySettings, ThetaGrid, TransformKind};
use hlik_core::estimation::{observed_vs_expected, solve_mhle, MhleSolution, MhleStatus};
use hlik_core::model::{model_with_param_scale, JointModel, ObservedData, ParamScale};
use hlik_core::prediction::{
    compare_triple, h_distribution, hdp_interval, pivotal_predictive, posterior_predictive_flat, prior_for_scale,
    Distance, FlatPrior, GridSpec, HdpInterval, PredictiveLaw,
};
use hlik_core::simulation::{
    duality_check, r_term_study, reproduce_paper, run_coverage, scale_sensitivity_study, ExperimentConfig,
    MomentConfig, ReproduceSettings, ScaleConfig, ScaleStatus, Term,
};
use hlik_core::HlikError;
use serde::Serialize;

use crate::args::{
    AuditArgs, CoverageArgs, DualityArgs, FitArgs, MomentArgs, PredictArgs, PriorArg, ReproduceArgs, ScaleArg,
    ScalesArgs,
};
use crate::io::{csv_string, emit, read_data, to_json, write_manifest, CliError, CliResult};
use crate::settings::{resolve, Overrides};

fn scale(s: ScaleArg) -> ParamScale {
    match s {
        ScaleArg::Lambda => ParamScale::Lambda,
        ScaleArg::LogLambda => ParamScale::LogLambda,
    }
}

fn prior(p: PriorArg) -> FlatPrior {
    match p {
        PriorArg::FlatLambda => FlatPrior::FlatLambda,
        PriorArg::FlatLogLambda => FlatPrior::FlatLogLambda,
    }
}

#[derive(Serialize)]
struct AuditConfig<'a> {
    model: &'a str,
    param_scale: ParamScale,
    theta_grid: &'a str,
    full: Option<FullIdentitySettings>,
    bartlize: bool,
    transforms: &'a [String],
}

pub fn audit_cmd(a: &AuditArgs) -> CliResult<()> {
    let m = model_with_param_scale(&a.model, scale(a.param_scale))?;
    let grid = ThetaGrid::parse(&a.theta_grid)?.points(m.as_ref())?;
    let full = if a.full {
        let seed = a
            .seed
            .ok_or_else(|| CliError::Config("--full draws Monte Carlo samples and needs --seed".into()))?;
        Some(FullIdentitySettings {
            n_obs: a.n_obs,
            n_mc: a.n_mc,
            seed,
        })
    } else {
        None
    };
    let settings = AuditSettings {
        full,
        ..AuditSettings::default()
    };
    let json = if a.bartlize {
        let catalog = a
            .transforms
            .iter()
            .map(|t| TransformKind::parse(t))
            .collect::<Result<Vec<_>, HlikError>>()?;
        to_json(&bartlize_search(&m, &grid, &catalog, &settings)?)?
    } else {
        let report = audit(m.as_ref(), &grid, &settings)?;
        eprintln!("{}: {:?}", report.model, report.weakest_verdict());
        to_json(&report)?
    };
    emit(a.out.as_deref(), &json)?;
    let cfg = AuditConfig {
        model: &a.model,
        param_scale: scale(a.param_scale),
        theta_grid: &a.theta_grid,
        full,
        bartlize: a.bartlize,
        transforms: &a.transforms,
    };
    write_manifest(a.out.as_deref(), "audit", &cfg, a.seed, &[])
}

#[derive(Serialize)]
struct FitOutput {
    n: usize,
    sample_mean: f64,
    observed_minus_expected: Option<f64>,
    solution: MhleSolution,
}

pub fn fit_cmd(a: &FitArgs) -> CliResult<()> {
    let m = model_with_param_scale(&a.model, scale(a.param_scale))?;
    let y = read_data(&a.data)?;
    let sol = solve_mhle(m.as_ref(), &y, None)?;
    let status = sol.status;
    let message = sol.message.clone();
    let gap = if status == MhleStatus::Converged && sol.expected_hessian.is_some() {
        Some(observed_vs_expected(m.as_ref(), &y, &sol)?)
    } else {
        None
    };
    if sol.expected_positive_definite == Some(false) {
        eprintln!("warning: expected Hessian is not positive definite; no standard errors");
    }
    let out = FitOutput {
        n: y.n(),
        sample_mean: y.mean(),
        observed_minus_expected: gap,
        solution: sol,
    };
    emit(a.out.as_deref(), &to_json(&out)?)?;
    #[derive(Serialize)]
    struct Cfg<'a> {
        model: &'a str,
        param_scale: ParamScale,
    }
    write_manifest(
        a.out.as_deref(),
        "fit",
        &Cfg {
            model: &a.model,
            param_scale: scale(a.param_scale),
        },
        None,
        &[&a.data],
    )?;
    match status {
        MhleStatus::Converged => Ok(()),
        MhleStatus::NoInteriorMode | MhleStatus::Diverged => Err(CliError::Numeric(HlikError::NoInteriorMode(message))),
        MhleStatus::HessianNotPD => Err(CliError::Numeric(HlikError::HessianNotNegDef)),
        MhleStatus::MaxIterations => Err(CliError::Numeric(HlikError::MaxIterations(out.solution.iterations))),
    }
}

#[derive(Serialize)]
struct Distances {
    h_vs_pivotal: Distance,
    h_vs_posterior: Distance,
    pivotal_vs_posterior: Distance,
}

#[derive(Serialize)]
struct Hdps {
    h_distribution: HdpInterval,
    pivotal: Option<HdpInterval>,
    posterior: Option<HdpInterval>,
}

#[derive(Serialize)]
struct PredictOutput {
    model: String,
    param_scale: ParamScale,
    n: usize,
    alpha: f64,
    /// "r" for the ratio scale r = k·u, "v" otherwise.
    scale: &'static str,
    /// k in r = k·u; HDP endpoints on u are r-endpoints divided by k.
    ratio_k: Option<f64>,
    prior: Option<FlatPrior>,
    nodes: Vec<f64>,
    h_distribution: Vec<f64>,
    pivotal: Option<Vec<f64>>,
    posterior: Option<Vec<f64>>,
    distances: Option<Distances>,
    hdp: Hdps,
    hdp_natural: Option<Hdps>,
}

#[derive(Serialize)]
struct GridRow {
    x: f64,
    h_distribution: f64,
    pivotal: Option<f64>,
    posterior: Option<f64>,
}

fn predict_output(m: &dyn JointModel, y: &ObservedData, a: &PredictArgs) -> CliResult<PredictOutput> {
    let ps = scale(a.param_scale);
    let spec = GridSpec {
        nodes: a.grid_nodes,
        ..GridSpec::default()
    };
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(CliError::Config(format!("--alpha {} outside (0, 1)", a.alpha)));
    }
    let o = m.oracles();
    if o.ratio_scale.is_some() && o.pivotal.is_some() && o.posterior_flat.is_some() {
        let t = compare_triple(m, y, ps, &spec)?;
        let k = o.ratio_scale.as_ref().expect("checked")(y);
        let hdp = Hdps {
            h_distribution: t.h_grid.hdp(a.alpha)?,
            pivotal: Some(hdp_interval(&PredictiveLaw::Closed(t.pivotal_law), a.alpha)?),
            posterior: Some(hdp_interval(&PredictiveLaw::Closed(t.posterior_law), a.alpha)?),
        };
        let natural = Hdps {
            h_distribution: hdp.h_distribution.scaled(1.0 / k),
            pivotal: hdp.pivotal.as_ref().map(|h| h.scaled(1.0 / k)),
            posterior: hdp.posterior.as_ref().map(|h| h.scaled(1.0 / k)),
        };
        return Ok(PredictOutput {
            model: m.name(),
            param_scale: ps,
            n: y.n(),
            alpha: a.alpha,
            scale: "r",
            ratio_k: Some(k),
            prior: Some(t.prior),
            nodes: t.h_grid.nodes.clone(),
            h_distribution: t.h_dist,
            pivotal: Some(t.pivotal),
            posterior: Some(t.posterior),
            distances: Some(Distances {
                h_vs_pivotal: t.h_vs_pivotal,
                h_vs_posterior: t.h_vs_posterior,
                pivotal_vs_posterior: t.pivotal_vs_posterior,
            }),
            hdp,
            hdp_natural: Some(natural),
        });
    }
    let g = h_distribution(m, y, &spec)?;
    let pivotal = pivotal_predictive(m, y).ok();
    let posterior = posterior_predictive_flat(m, y, prior_for_scale(ps)).ok();
    let grid = g.v;
    Ok(PredictOutput {
        model: m.name(),
        param_scale: ps,
        n: y.n(),
        alpha: a.alpha,
        scale: "v",
        ratio_k: None,
        prior: None,
        h_distribution: grid.densities(),
        pivotal: None,
        posterior: None,
        distances: None,
        hdp: Hdps {
            h_distribution: grid.hdp(a.alpha)?,
            pivotal: pivotal.map(|p| hdp_interval(&PredictiveLaw::Closed(p), a.alpha)).transpose()?,
            posterior: posterior.map(|p| hdp_interval(&PredictiveLaw::Closed(p), a.alpha)).transpose()?,
        },
        nodes: grid.nodes,
        hdp_natural: None,
    })
}

pub fn predict_cmd(a: &PredictArgs) -> CliResult<()> {
    let m = model_with_param_scale(&a.model, scale(a.param_scale))?;
    let y = read_data(&a.data)?;
    let out = predict_output(m.as_ref(), &y, a)?;
    emit(a.out.as_deref(), &to_json(&out)?)?;
    if let Some(p) = &a.csv {
        let rows: Vec<GridRow> = out
            .nodes
            .iter()
            .enumerate()
            .map(|(i, x)| GridRow {
                x: *x,
                h_distribution: out.h_distribution[i],
                pivotal: out.pivotal.as_ref().map(|v| v[i]),
                posterior: out.posterior.as_ref().map(|v| v[i]),
            })
            .collect();
        emit(Some(p), &csv_string(&rows)?)?;
    }
    #[derive(Serialize)]
    struct Cfg<'a> {
        model: &'a str,
        param_scale: ParamScale,
        alpha: f64,
        grid_nodes: usize,
    }
    let cfg = Cfg {
        model: &a.model,
        param_scale: scale(a.param_scale),
        alpha: a.alpha,
        grid_nodes: a.grid_nodes,
    };
    write_manifest(a.out.as_deref(), "predict", &cfg, None, &[&a.data])?;
    write_manifest(a.csv.as_deref(), "predict", &cfg, None, &[&a.data])
}

#[derive(Serialize)]
struct CoverageCsvRow {
    method: String,
    n: usize,
    alpha: f64,
    nominal: f64,
    coverage: f64,
    se: f64,
    mean_width: f64,
    replications: usize,
}

pub fn coverage_cmd(a: &CoverageArgs) -> CliResult<()> {
    let mut o = Overrides::default();
    o.int("seed", a.seed)
        .string("model", a.model.as_deref())
        .floats("theta", a.theta.as_deref())
        .ints("sample-sizes", a.n.as_deref())
        .int("replications", a.replications.map(|r| r as u64))
        .floats("alphas", a.alpha.as_deref())
        .strings("methods", a.methods.as_deref())
        .string("param-scale", a.param_scale.map(|s| scale(s).as_str()))
        .int("grid-nodes", a.grid_nodes.map(|g| g as u64));
    let cfg: ExperimentConfig = resolve(a.config.as_deref(), o)?;
    let res = run_coverage(&cfg)?;
    let rows: Vec<CoverageCsvRow> = res
        .rows
        .iter()
        .map(|r| CoverageCsvRow {
            method: r.method.to_string(),
            n: r.n,
            alpha: r.alpha,
            nominal: r.nominal,
            coverage: r.coverage,
            se: r.se,
            mean_width: r.mean_width,
            replications: r.replications,
        })
        .collect();
    emit(a.out.as_deref(), &csv_string(&rows)?)?;
    let inputs: Vec<&Path> = a.config.as_deref().into_iter().collect();
    write_manifest(a.out.as_deref(), "coverage", &cfg, Some(cfg.seed), &inputs)
}

fn moment_config(a: &MomentArgs) -> CliResult<MomentConfig> {
    let mut o = Overrides::default();
    o.int("seed", a.seed)
        .ints("sample-sizes", a.n.as_deref())
        .int("replications", a.replications.map(|r| r as u64))
        .float("lambda", a.lambda);
    resolve(a.config.as_deref(), o)
}

#[derive(Serialize)]
struct RtermCsvRow {
    n: String,
    mean_r: f64,
    mean_r_se: f64,
    exact_mean_r: Option<f64>,
    var_r: Option<f64>,
    var_r_se: Option<f64>,
    mean_abs_r: Option<f64>,
    mean_z: Option<f64>,
    var_z: Option<f64>,
    var_log_y: Option<f64>,
    var_log_y_se: Option<f64>,
    z_to_normal_ratio_at_one: Option<f64>,
}

pub fn rterm_cmd(a: &MomentArgs) -> CliResult<()> {
    let cfg = moment_config(a)?;
    let s = r_term_study(&cfg)?;
    let mut rows: Vec<RtermCsvRow> = s
        .rows
        .iter()
        .map(|r| RtermCsvRow {
            n: r.n.to_string(),
            mean_r: r.mean_r.mean,
            mean_r_se: r.mean_r.se,
            exact_mean_r: Some(r.exact_mean_r),
            var_r: Some(r.var_r.variance),
            var_r_se: Some(r.var_r.se),
            mean_abs_r: Some(r.mean_abs_r.mean),
            mean_z: Some(r.mean_z.mean),
            var_z: Some(r.var_z.variance),
            var_log_y: None,
            var_log_y_se: None,
            z_to_normal_ratio_at_one: None,
        })
        .collect();
    let l = &s.limit;
    rows.push(RtermCsvRow {
        n: "inf".into(),
        mean_r: l.mean_r_inf.mean,
        mean_r_se: l.mean_r_inf.se,
        exact_mean_r: Some(l.euler_gamma),
        var_r: None,
        var_r_se: None,
        mean_abs_r: None,
        mean_z: None,
        var_z: None,
        var_log_y: Some(l.var_log_y.variance),
        var_log_y_se: Some(l.var_log_y.se),
        z_to_normal_ratio_at_one: Some(l.z_to_normal_ratio_at_one),
    });
    emit(a.out.as_deref(), &csv_string(&rows)?)?;
    let inputs: Vec<&Path> = a.config.as_deref().into_iter().collect();
    write_manifest(a.out.as_deref(), "rterm", &cfg, Some(cfg.seed), &inputs)
}

#[derive(Serialize)]
struct DualityCsvRow {
    n: usize,
    prior: &'static str,
    side: &'static str,
    mean_term: f64,
    mean_term_se: f64,
    variance_term: f64,
    variance_term_se: f64,
    total: f64,
    total_se: f64,
}

pub fn duality_cmd(a: &DualityArgs) -> CliResult<()> {
    let cfg = moment_config(&a.moments)?;
    let p = prior(a.prior);
    let d = duality_check(&cfg, p)?;
    let tag = match p {
        FlatPrior::FlatLambda => "flat-lambda",
        FlatPrior::FlatLogLambda => "flat-log-lambda",
    };
    let mut rows = Vec::new();
    for r in &d.rows {
        let mut push = |side: &'static str, m: Term, v: Term, t: Term| {
            rows.push(DualityCsvRow {
                n: r.n,
                prior: tag,
                side,
                mean_term: m.value,
                mean_term_se: m.se,
                variance_term: v.value,
                variance_term_se: v.se,
                total: t.value,
                total_se: t.se,
            })
        };
        push("posterior", r.posterior.mean_term, r.posterior.variance_term, r.posterior.total);
        push("posterior-mc", r.posterior_mc.mean_term, r.posterior_mc.variance_term, r.posterior_mc.total);
        push("sampling", r.sampling.mean_term, r.sampling.variance_term, r.sampling.total);
        push("gap", r.gap_mean, r.gap_variance, r.gap_total);
    }
    emit(a.moments.out.as_deref(), &csv_string(&rows)?)?;
    #[derive(Serialize)]
    struct Cfg<'a> {
        #[serde(flatten)]
        moments: &'a MomentConfig,
        prior: FlatPrior,
    }
    let inputs: Vec<&Path> = a.moments.config.as_deref().into_iter().collect();
    write_manifest(a.moments.out.as_deref(), "duality", &Cfg { moments: &cfg, prior: p }, Some(cfg.seed), &inputs)
}

#[derive(Serialize)]
struct ScalesCsvRow {
    n: usize,
    param_scale: &'static str,
    status: &'static str,
    h_vs_pivotal_sup: Option<f64>,
    h_vs_pivotal_tv: Option<f64>,
    h_vs_posterior_sup: Option<f64>,
    h_vs_posterior_tv: Option<f64>,
    pivotal_vs_posterior_sup: Option<f64>,
    pivotal_vs_posterior_tv: Option<f64>,
}

pub fn scales_cmd(a: &ScalesArgs) -> CliResult<()> {
    let mut o = Overrides::default();
    o.int("seed", a.seed)
        .ints("sample-sizes", a.n.as_deref())
        .float("lambda", a.lambda)
        .int("grid-nodes", a.grid_nodes.map(|g| g as u64));
    let cfg: ScaleConfig = resolve(a.config.as_deref(), o)?;
    let rows: Vec<ScalesCsvRow> = scale_sensitivity_study(&cfg)?
        .iter()
        .map(|r| ScalesCsvRow {
            n: r.n,
            param_scale: r.param_scale.as_str(),
            status: match r.status {
                ScaleStatus::Ok => "ok",
                ScaleStatus::ImproperPosterior => "improper-posterior",
            },
            h_vs_pivotal_sup: r.h_vs_pivotal.map(|d| d.sup_norm),
            h_vs_pivotal_tv: r.h_vs_pivotal.map(|d| d.total_variation),
            h_vs_posterior_sup: r.h_vs_posterior.map(|d| d.sup_norm),
            h_vs_posterior_tv: r.h_vs_posterior.map(|d| d.total_variation),
            pivotal_vs_posterior_sup: r.pivotal_vs_posterior.map(|d| d.sup_norm),
            pivotal_vs_posterior_tv: r.pivotal_vs_posterior.map(|d| d.total_variation),
        })
        .collect();
    emit(a.out.as_deref(), &csv_string(&rows)?)?;
    let inputs: Vec<&Path> = a.config.as_deref().into_iter().collect();
    write_manifest(a.out.as_deref(), "scales", &cfg, Some(cfg.seed), &inputs)
}

pub fn reproduce_cmd(a: &ReproduceArgs) -> CliResult<()> {
    let seed = a
        .seed
        .ok_or_else(|| CliError::Config("reproduce-paper is randomized and needs an explicit --seed".into()))?;
    let settings = ReproduceSettings::default();
    let report = reproduce_paper(seed, &settings)?;
    if a.table {
        eprint!("{}", report.table());
    }
    let failed = report.checks.iter().filter(|c| !c.pass).count();
    eprintln!(
        "{} checks, {} passed, {} failed",
        report.checks.len(),
        report.checks.len() - failed,
        failed
    );
    emit(a.out.as_deref(), &to_json(&report)?)?;
    write_manifest(a.out.as_deref(), "reproduce-paper", &settings, Some(seed), &[])
}
