use hlik_core::prediction::FlatPrior;
use hlik_core::simulation::{duality_check, run_coverage, ExperimentConfig, Method, MomentConfig};
use hlik_core::HlikError;
use proptest::prelude::*;

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

fn small_config(seed: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(seed);
    c.sample_sizes = vec![3, 8];
    c.replications = 300;
    c.alphas = vec![0.1, 0.5];
    c.methods = vec![Method::Pivotal, Method::HessianNormal, Method::Aphl];
    c.grid_nodes = 201;
    c
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(6) })]

    #[test]
    fn coverage_rows_are_binomial_summaries(seed in any::<u64>()) {
        let res = run_coverage(&small_config(seed)).unwrap();
        prop_assert_eq!(res.rows.len(), 2 * 2 * 3);
        for r in &res.rows {
            prop_assert!((0.0..=1.0).contains(&r.coverage));
            let se = (r.coverage * (1.0 - r.coverage) / r.replications as f64).sqrt();
            prop_assert!((r.se - se).abs() < 1e-15);
            prop_assert!((r.nominal - (1.0 - r.alpha)).abs() < 1e-15);
        }
    }

    #[test]
    fn coverage_is_bitwise_independent_of_workers(seed in any::<u64>()) {
        let cfg = small_config(seed);
        let a = pool(1).install(|| run_coverage(&cfg)).unwrap();
        let b = pool(4).install(|| run_coverage(&cfg)).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn flat_lambda_duality_needs_two_observations() {
    let cfg = MomentConfig::new(vec![1], 1000, 3);
    assert!(matches!(duality_check(&cfg, FlatPrior::FlatLambda), Err(HlikError::ImproperPosterior(_))));
    assert!(duality_check(&cfg, FlatPrior::FlatLogLambda).is_ok());
}
