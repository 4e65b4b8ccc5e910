use hlik_core::estimation::solve_mhle;
use hlik_core::model::{
    h_derivatives, h_loglik, h_raw, laplace_marginal, marginal_loglik, model_with_param_scale, ModelRef, ObservedData,
    ParamScale, MODEL_NAMES,
};
use hlik_core::numeric::{gradient, hessian, map_replicates, mc_expect, QuadratureSpec, RngStream};
use hlik_core::prediction::{aphl, h_distribution, hdp_multiplier, GridSpec, RatioPareto};
use hlik_core::audit::density_mass;
use proptest::prelude::*;
use rand_distr::Exp1;

fn all_models() -> Vec<ModelRef> {
    let mut out = Vec::new();
    for name in MODEL_NAMES {
        for scale in [ParamScale::Lambda, ParamScale::LogLambda] {
            // a log map on a real-valued mean is rejected
            if let Ok(m) = model_with_param_scale(name, scale) {
                out.push(m);
            }
        }
    }
    out
}

/// A random interior θ, a draw of v at θ and n observations given v.
fn draw(m: &ModelRef, t: f64, n: usize, seed: u64) -> (Vec<f64>, Vec<f64>, ObservedData) {
    let axis = m.theta_range().axes[0];
    let theta = vec![axis.lower + t * axis.width()];
    let mut rng = RngStream::new(seed, 0).rng();
    let v = m.sample_v(&theta, &mut rng);
    let y = ObservedData::new(m.sample_y(&theta, &v, n, &mut rng)).unwrap();
    (theta, v, y)
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(32) })]

    #[test]
    fn densities_of_v_have_unit_mass(idx in 0usize..9, t in 0.0f64..1.0) {
        let m = &all_models()[idx];
        let axis = m.theta_range().axes[0];
        let theta = [axis.lower + t * axis.width()];
        let spec = QuadratureSpec::default();
        let mass = density_mass(m.as_ref(), &theta, &spec).unwrap();
        prop_assert!((mass - 1.0).abs() < 10.0 * spec.rel_tol, "{} θ={theta:?} mass={mass}", m.name());
    }

    #[test]
    fn analytic_derivatives_match_finite_differences(idx in 0usize..9, t in 0.05f64..0.95, n in 1usize..8, seed in any::<u64>()) {
        let m = &all_models()[idx];
        let (theta, v, y) = draw(m, t, n, seed);
        // keep the finite-difference stencil well inside the support
        let lower = m.support_v(&theta).axes[0].lower;
        prop_assume!(!(v[0] - lower < 0.2));
        let d = h_derivatives(m.as_ref(), &theta, &v, &y).unwrap();
        let phi: Vec<f64> = theta.iter().chain(&v).copied().collect();
        let f = |x: &[f64]| h_raw(m.as_ref(), &x[..1], &x[1..], &y);
        let g = gradient(f, &phi, None).unwrap();
        let h = hessian(f, &phi, None).unwrap();
        for i in 0..2 {
            let scale = d.grad[i].abs().max(1.0);
            prop_assert!((g[i] - d.grad[i]).abs() < 1e-5 * scale, "{} grad {i}: fd {} vs {}", m.name(), g[i], d.grad[i]);
            for j in 0..2 {
                let scale = d.hess[(i, j)].abs().max(1.0);
                prop_assert!((h[(i, j)] - d.hess[(i, j)]).abs() < 1e-5 * scale,
                    "{} hess {i}{j}: fd {} vs {}", m.name(), h[(i, j)], d.hess[(i, j)]);
            }
        }
    }

    #[test]
    fn hessian_is_exactly_symmetric(a in -2.0f64..2.0, b in -2.0f64..2.0, x in prop::collection::vec(-1.5f64..1.5, 3)) {
        let f = |z: &[f64]| (a * z[0] * z[1]).exp() + (b * z[0]).sin() * z[1].powi(3) + z[2] * z[0].cosh();
        let h = hessian(f, &x, None).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                prop_assert_eq!(h[(i, j)].to_bits(), h[(j, i)].to_bits());
            }
        }
    }

    #[test]
    fn h_is_the_sum_of_its_parts(idx in 0usize..9, t in 0.05f64..0.95, n in 1usize..8, seed in any::<u64>()) {
        let m = &all_models()[idx];
        let (theta, v, y) = draw(m, t, n, seed);
        let h = h_loglik(m.as_ref(), &y, &theta, &v).unwrap();
        prop_assert_eq!(h, m.log_cond(&theta, &v, &y) + m.log_marg_v(&theta, &v));
    }

    #[test]
    fn gaussian_laplace_is_exact(mu in -2.0f64..2.0, n in 1usize..20, seed in any::<u64>()) {
        let m = model_with_param_scale("normal-future", ParamScale::Lambda).unwrap();
        let (_, _, y) = draw(&m, 0.5, n, seed);
        let lap = laplace_marginal(m.as_ref(), &y, &[mu]).unwrap();
        let exact = marginal_loglik(m.as_ref(), &y, &[mu], &QuadratureSpec::default()).unwrap();
        prop_assert!((lap - exact).abs() < 1e-9, "{lap} vs {exact}");
    }

    #[test]
    fn mle_of_log_scale_exponential_is_the_sample_mean(n in 1usize..40, seed in any::<u64>()) {
        let m = model_with_param_scale("exp-future-log", ParamScale::LogLambda).unwrap();
        let (_, _, y) = draw(&m, 0.5, n, seed);
        let sol = solve_mhle(m.as_ref(), &y, None).unwrap();
        prop_assert!(sol.is_converged());
        let ybar = y.mean();
        prop_assert!((sol.theta.values[0].exp() / ybar - 1.0).abs() < 1e-12);
        prop_assert!((sol.v.values[0].exp() / ybar - 1.0).abs() < 1e-12);
    }

    #[test]
    fn converged_solutions_solve_the_score_equation(idx in 0usize..9, t in 0.05f64..0.95, n in 2usize..20, seed in any::<u64>()) {
        let m = &all_models()[idx];
        let (_, _, y) = draw(m, t, n, seed);
        if let Ok(sol) = solve_mhle(m.as_ref(), &y, None) {
            if sol.is_converged() {
                let s = sol.score_at_solution.iter().fold(0.0f64, |a, b| a.max(b.abs()));
                prop_assert!(s < 1e-8, "{}: score {s}", m.name());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(12) })]

    #[test]
    fn density_grids_have_unit_mass(scale_log in any::<bool>(), n in 1usize..30, seed in any::<u64>()) {
        let scale = if scale_log { ParamScale::LogLambda } else { ParamScale::Lambda };
        for (name, scale) in [("exp-future-log", scale), ("normal-future", ParamScale::Lambda)] {
            let m = model_with_param_scale(name, scale).unwrap();
            let (_, _, y) = draw(&m, 0.5, n, seed);
            let g = h_distribution(m.as_ref(), &y, &GridSpec::default()).unwrap();
            prop_assert!((g.v.mass() - 1.0).abs() < 1e-6);
            if let Some(r) = &g.r {
                prop_assert!((r.mass() - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn ratio_grid_is_the_exact_pushforward(n in 1usize..30, seed in any::<u64>()) {
        let m = model_with_param_scale("exp-future-log", ParamScale::LogLambda).unwrap();
        let (_, _, y) = draw(&m, 0.5, n, seed);
        let g = h_distribution(m.as_ref(), &y, &GridSpec::default()).unwrap();
        let r = g.r.unwrap();
        let k = n as f64 / y.sum();
        let fv = g.v.densities();
        let fr = r.densities();
        for i in (0..r.len()).step_by(97) {
            let v = g.v.nodes[i];
            prop_assert!((r.nodes[i] / (k * v.exp()) - 1.0).abs() < 1e-12);
            let lhs = fr[i] * r.nodes[i];
            prop_assert!((lhs - fv[i]).abs() <= 1e-9 * fv[i].max(1e-300) + 1e-300, "node {i}: {lhs} vs {}", fv[i]);
        }
    }

    #[test]
    fn log_scale_aphl_gains_minus_log_lambda(n in 1usize..30, seed in any::<u64>(), vs in prop::collection::vec(-3.0f64..3.0, 4)) {
        let lam = model_with_param_scale("exp-future-log", ParamScale::Lambda).unwrap();
        let log = model_with_param_scale("exp-future-log", ParamScale::LogLambda).unwrap();
        let (_, _, y) = draw(&lam, 0.5, n, seed);
        let shifts: Vec<f64> = vs
            .iter()
            .map(|&v| {
                let a = aphl(lam.as_ref(), &y, &[v]).unwrap();
                let b = aphl(log.as_ref(), &y, &[v]).unwrap();
                b.value - a.value + a.theta[0].ln()
            })
            .collect();
        for s in &shifts[1..] {
            prop_assert!((s - shifts[0]).abs() < 1e-9, "{shifts:?}");
        }
    }

    #[test]
    fn hdp_multiplier_hits_the_nominal_level(alpha in 0.01f64..0.99, n in 1usize..200) {
        let c = hdp_multiplier(alpha, n);
        let law = RatioPareto::pivotal(n);
        prop_assert!((law.cdf(c) - (1.0 - alpha)).abs() < 1e-12);
        prop_assert!((law.hdp_upper(alpha) - c).abs() <= 1e-12 * c.max(1.0));
    }

    #[test]
    fn monte_carlo_ignores_the_worker_count(seed in any::<u64>(), stream in 0u64..1000) {
        let s = RngStream::new(seed, stream);
        let run = |threads: usize| {
            pool(threads).install(|| {
                let e = mc_expect(|x: &f64| *x, Exp1, 500, s).unwrap();
                let r: Vec<u64> = map_replicates(300, s, |i, rng| {
                    use rand::Rng;
                    rng.random::<u64>() ^ i as u64
                });
                (e.mean.to_bits(), e.se.to_bits(), r)
            })
        };
        prop_assert_eq!(run(1), run(4));
    }
}

#[test]
fn laplace_gap_for_log_scale_exponential_does_not_grow() {
    let m = model_with_param_scale("exp-future-log", ParamScale::LogLambda).unwrap();
    let theta = [0.3f64];
    let gaps: Vec<f64> = [5usize, 20, 80]
        .iter()
        .map(|&n| {
            let (_, _, y) = draw(&m, 0.5, n, 17 + n as u64);
            let lap = laplace_marginal(m.as_ref(), &y, &theta).unwrap();
            let exact = marginal_loglik(m.as_ref(), &y, &theta, &QuadratureSpec::default()).unwrap();
            (lap - exact).abs()
        })
        .collect();
    // y and the future value are independent given λ, so the gap is the Stirling
    // error of Γ(1): |1 − ½ log 2π|, whatever n is
    let stirling = (1.0 - 0.5 * (2.0 * std::f64::consts::PI).ln()).abs();
    for w in gaps.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "{gaps:?}");
    }
    for g in &gaps {
        assert!((g - stirling).abs() < 1e-7, "{gaps:?}");
    }
}
