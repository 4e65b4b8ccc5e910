//! Acceptance criteria, one line each. Run with
//! `cargo test -p hlik-cli --test acceptance -- --nocapture`.

use std::process::Command;
use std::time::{Duration, Instant};

use hlik_core::audit::{check_condition1, check_condition2, ThetaGrid};
use hlik_core::estimation::{expected_hessian, inverse_information, solve_mhle, ExpectedHessianMethod, MhleStatus};
use hlik_core::model::{bayarri_log, bayarri_marginal, exponential_future, ObservedData, ParamScale, UnobservableScale};
use hlik_core::numeric::{Interval, QuadratureSpec, RngStream};
use hlik_core::prediction::{h_distribution, hdp_multiplier, FlatPrior, GridSpec, RatioPareto};
use hlik_core::simulation::{limit_law, run_coverage, variance_breakdown, ExperimentConfig, Method, MomentConfig};

const EULER: f64 = 0.577_215_664_901_532_9;
const SEED: u64 = 20_240_601;

fn pi2_6() -> f64 {
    std::f64::consts::PI.powi(2) / 6.0
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn bayarri() -> Outcome {
    let range = Interval::new(0.1, 10.0).unwrap();
    let natural = bayarri_marginal(range);
    let log = bayarri_log(range);
    let quad = QuadratureSpec::default();
    let grid = ThetaGrid::default().points(natural.as_ref()).unwrap();
    let mut rel: f64 = 0.0;
    let mut resid: f64 = 0.0;
    for t in &grid {
        let c = check_condition1(natural.as_ref(), t, &quad).unwrap();
        rel = rel.max((c.value[0] - (-t[0])).abs() / t[0]);
        resid = resid
            .max(check_condition1(log.as_ref(), t, &quad).unwrap().max_abs())
            .max(check_condition2(log.as_ref(), t, &quad).unwrap().max_abs());
    }
    outcome(rel < 1e-4 && resid < 1e-6, format!("natural rel err {rel:.2e}, log residual {resid:.2e}"))
}

fn exponential_mhle() -> Outcome {
    let log_u = exponential_future(UnobservableScale::LogU, ParamScale::Lambda);
    let nat_u = exponential_future(UnobservableScale::NaturalU, ParamScale::Lambda);
    let mut worst: f64 = 0.0;
    let mut no_mode = 0;
    for i in 0..100u64 {
        let n = 2 + (i as usize * 7) % 39;
        let lambda = (0.06 * i as f64 - 3.0).exp();
        let mut rng = RngStream::new(SEED, i).rng();
        let y = ObservedData::new(log_u.sample_y(&[lambda], &[0.0], n, &mut rng)).unwrap();
        let ybar = y.observations().iter().sum::<f64>() / n as f64;
        let sol = solve_mhle(log_u.as_ref(), &y, None).unwrap();
        worst = if sol.status == MhleStatus::Converged {
            worst
                .max((sol.theta.values[0] / ybar - 1.0).abs())
                .max((sol.v.values[0].exp() / ybar - 1.0).abs())
        } else {
            f64::INFINITY
        };
        let nat = solve_mhle(nat_u.as_ref(), &y, None).unwrap();
        if matches!(nat.status, MhleStatus::NoInteriorMode | MhleStatus::Diverged) {
            no_mode += 1;
        }
    }
    outcome(worst < 1e-8 && no_mode == 100, format!("worst rel err {worst:.2e}, natural-u without mode {no_mode}/100"))
}

fn hessian_algebra() -> Outcome {
    let m = exponential_future(UnobservableScale::LogU, ParamScale::Lambda);
    let target = [[5.0, -1.0], [-1.0, 1.0]];
    let closed = expected_hessian(m.as_ref(), &[1.0], 4, ExpectedHessianMethod::ClosedForm).unwrap();
    let exact = closed.matrix == vec![target[0].to_vec(), target[1].to_vec()];
    let mc = expected_hessian(
        m.as_ref(),
        &[1.0],
        4,
        ExpectedHessianMethod::MonteCarlo {
            n_mc: 1_000_000,
            stream: RngStream::new(SEED, 3),
        },
    )
    .unwrap();
    let se = mc.se.unwrap();
    let mut mc_ok = true;
    for i in 0..2 {
        for j in 0..2 {
            mc_ok &= (mc.matrix[i][j] - target[i][j]).abs() <= 3.0 * se[i][j] + 1e-12;
        }
    }
    let inv = inverse_information(&closed.matrix()).inverse.unwrap();
    let inv_target = [[0.25, 0.25], [0.25, 1.25]];
    let inv_err = (0..4).map(|k| (inv[k / 2][k % 2] - inv_target[k / 2][k % 2]).abs()).fold(0.0, f64::max);
    let nat = exponential_future(UnobservableScale::NaturalU, ParamScale::Lambda);
    let nat_info = expected_hessian(nat.as_ref(), &[1.0], 4, ExpectedHessianMethod::ClosedForm).unwrap();
    let nat_pd = inverse_information(&nat_info.matrix()).positive_definite;
    outcome(
        exact && mc_ok && inv_err < 1e-10 && !nat_pd,
        format!("closed form exact {exact}, MC within 3 SE {mc_ok}, inverse err {inv_err:.1e}, natural-u PD {nat_pd}"),
    )
}

fn moment_constants() -> Outcome {
    let lim = limit_law(1_000_000, SEED).unwrap();
    let v = lim.var_log_y;
    let r = lim.mean_r_inf;
    let ok = (v.variance - pi2_6()).abs() < 3.0 * v.se && (r.mean - EULER).abs() < 3.0 * r.se;
    outcome(
        ok,
        format!("V(log y) {:.5} ± {:.5}, E[R_inf] {:.5} ± {:.5}", v.variance, v.se, r.mean, r.se),
    )
}

fn predictive_identities() -> Outcome {
    let spec = GridSpec::default();
    let mut worst: f64 = 0.0;
    for n in [2usize, 5, 10, 50] {
        let nf = n as f64;
        let y: Vec<f64> = (1..=n).map(|i| 0.3 + 0.9 * (i as f64 * 0.731).fract()).collect();
        let y = ObservedData::new(y).unwrap();
        for (scale, order, lead) in [(ParamScale::Lambda, nf, (nf - 1.0) / nf), (ParamScale::LogLambda, nf + 1.0, 1.0)] {
            let m = exponential_future(UnobservableScale::LogU, scale);
            let g = h_distribution(m.as_ref(), &y, &spec).unwrap().r.unwrap();
            for (r, f) in g.nodes.iter().zip(g.densities()) {
                worst = worst.max((f - lead * (1.0 + r / nf).powf(-order)).abs());
            }
        }
    }
    let exact = [2usize, 5, 10, 50]
        .iter()
        .all(|&n| RatioPareto::posterior_flat(n, FlatPrior::FlatLogLambda).unwrap() == RatioPareto::pivotal(n));
    outcome(worst < 1e-6 && exact, format!("sup-norm {worst:.2e}, flat-log-λ posterior == pivotal {exact}"))
}

fn hdp_coverage() -> Outcome {
    let c = hdp_multiplier(0.05, 10);
    let direct = 10.0 * (0.05f64.powf(-0.1) - 1.0);
    let mut cfg = ExperimentConfig::new(SEED);
    cfg.sample_sizes = vec![5, 10, 50];
    cfg.alphas = vec![0.05, 0.1, 0.5];
    cfg.replications = 10_000;
    cfg.methods = vec![Method::Pivotal];
    let res = run_coverage(&cfg).unwrap();
    let mut worst_z: f64 = 0.0;
    for r in &res.rows {
        let p = 1.0 - r.alpha;
        let se = (p * (1.0 - p) / r.replications as f64).sqrt();
        worst_z = worst_z.max((r.coverage - p).abs() / se);
    }
    let ok = res.rows.len() == 9 && worst_z <= 3.0 && (c - 3.4934).abs() < 1e-3 && (c - direct).abs() < 1e-12;
    outcome(ok, format!("worst |z| {worst_z:.2} over 9 cells, c(0.05, 10) = {c:.4}"))
}

fn breakdown() -> Outcome {
    let n = 50.0;
    let row = &variance_breakdown(&MomentConfig::new(vec![50], 1_000_000, SEED)).unwrap()[0];
    let tau2 = 1.0 + 1.0 / n;
    let excess = row.variance.variance - tau2;
    let ok = (row.tau2_v - tau2).abs() < 1e-12 && excess > 0.0 && (excess - (pi2_6() - 1.0)).abs() < 3.0 * row.variance.se;
    outcome(ok, format!("excess {excess:.5} vs {:.5} (SE {:.5})", pi2_6() - 1.0, row.variance.se))
}

fn determinism() -> Outcome {
    let run = |jobs: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_hlik"))
            .args(["reproduce-paper", "--seed", "1", "--jobs", jobs])
            .env_remove("HLIK_JOBS")
            .output()
            .unwrap();
        (out.status.success(), out.stdout)
    };
    let (ok1, a) = run("1");
    let (ok4, b) = run("4");
    outcome(ok1 && ok4 && !a.is_empty() && a == b, format!("{} bytes, identical {}", a.len(), a == b))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome, Option<u64>); 8] = [
        ("Bayarri audit", bayarri, Some(5)),
        ("exponential MHLE", exponential_mhle, Some(5)),
        ("Hessian algebra", hessian_algebra, Some(30)),
        ("moment constants", moment_constants, Some(60)),
        ("predictive identities", predictive_identities, Some(30)),
        ("HDP coverage", hdp_coverage, Some(120)),
        ("variance breakdown", breakdown, Some(60)),
        ("determinism across --jobs", determinism, None),
    ];
    let mut failed = Vec::new();
    for (k, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let took = start.elapsed();
        let in_time = limit.is_none_or(|s| took <= Duration::from_secs(s));
        let pass = o.pass && in_time;
        println!(
            "criterion {}: {} {name}: {} [{:.2}s{}]",
            k + 1,
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64(),
            limit.map_or(String::new(), |s| format!(" / {s}s")),
        );
        if !pass {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
