mod common;

use hlik_core::audit::{
    all_vanish, audit, check_boundary, check_condition1, check_condition2, check_full_identities, identity_tolerance,
    AuditSettings, BoundaryVerdict, Verdict,
};
use hlik_core::model::{model_with_param_scale, ParamScale, MODEL_NAMES};
use hlik_core::numeric::{QuadratureSpec, RngStream};
use hlik_core::HlikError;
use proptest::prelude::*;

#[test]
fn equal_endpoints_pass_condition_one() {
    let m = common::wavy();
    for a in [0.2, 0.5, 0.8] {
        let faces = check_boundary(m.as_ref(), &[a], 1).unwrap();
        assert!(!all_vanish(&faces));
        assert!(faces.iter().all(|f| f.verdict == BoundaryVerdict::EqualEndpoints), "{faces:?}");
        let c1 = check_condition1(m.as_ref(), &[a], &QuadratureSpec::default()).unwrap();
        assert!(c1.max_abs() < identity_tolerance(c1.max_error(), 0.0));
    }
    let report = audit(m.as_ref(), &[vec![0.3], vec![0.7]], &AuditSettings::default()).unwrap();
    assert!(report.grid.iter().all(|g| g.verdict == Verdict::Bartlized));
}

#[test]
fn theta_dependent_support_is_not_applicable() {
    let m = common::uniform_scale();
    let report = audit(m.as_ref(), &[vec![1.0], vec![2.0]], &AuditSettings::default()).unwrap();
    assert!(report.support_depends_on_theta);
    assert!(report.grid.iter().all(|g| g.verdict == Verdict::NotApplicable && g.cond1.is_none()));
    assert!(matches!(check_boundary(m.as_ref(), &[1.0], 1), Err(HlikError::NotApplicable(_))));
}

#[test]
fn a_block_vanishes_for_every_model() {
    let models = MODEL_NAMES
        .iter()
        .map(|n| model_with_param_scale(n, ParamScale::Lambda).unwrap())
        .chain([common::wavy()]);
    for m in models {
        let theta: Vec<f64> = m.theta_range().axes.iter().map(|a| a.center()).collect();
        let r = check_full_identities(m.as_ref(), &theta, 3, 40_000, RngStream::new(11, 0)).unwrap();
        for e in r.block_a.iter().flatten() {
            assert!(e.mean.abs() < identity_tolerance(0.0, e.se), "{}: {e:?}", m.name());
        }
    }
}

#[test]
fn wavy_density_satisfies_full_identities() {
    let m = common::wavy();
    let r = check_full_identities(m.as_ref(), &[0.5], 2, 100_000, RngStream::new(5, 0)).unwrap();
    for e in r.score_mean.iter().chain(r.second.iter().flatten()).chain(r.block_c.iter().flatten()) {
        assert!(e.mean.abs() < identity_tolerance(0.0, e.se), "{e:?}");
    }
}

fn audited_models() -> Vec<hlik_core::model::ModelRef> {
    let mut v: Vec<_> = MODEL_NAMES
        .iter()
        .map(|n| model_with_param_scale(n, ParamScale::Lambda).unwrap())
        .collect();
    v.push(common::wavy());
    v
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(24) })]

    #[test]
    fn vanishing_boundary_implies_conditions(idx in 0usize..6, t in 0.0f64..1.0) {
        let m = &audited_models()[idx];
        let axis = m.theta_range().axes[0];
        let theta = [axis.lower + t * axis.width()];
        let spec = QuadratureSpec::default();
        let b1 = check_boundary(m.as_ref(), &theta, 1).unwrap();
        let b2 = check_boundary(m.as_ref(), &theta, 2).unwrap();
        if all_vanish(&b1) {
            let c1 = check_condition1(m.as_ref(), &theta, &spec).unwrap();
            prop_assert!(c1.max_abs() < identity_tolerance(c1.max_error(), 0.0), "{} {:?}", m.name(), c1);
            if all_vanish(&b2) {
                let c2 = check_condition2(m.as_ref(), &theta, &spec).unwrap();
                prop_assert!(c2.max_abs() < identity_tolerance(c2.max_error(), 0.0), "{} {:?}", m.name(), c2);
            }
        }
    }

    #[test]
    fn bartlized_verdict_means_small_conditions(idx in 0usize..6, t in 0.0f64..1.0) {
        let m = &audited_models()[idx];
        let axis = m.theta_range().axes[0];
        let theta = vec![axis.lower + t * axis.width()];
        let report = audit(m.as_ref(), &[theta], &AuditSettings::default()).unwrap();
        let g = &report.grid[0];
        prop_assert!(g.verdict != Verdict::NotApplicable);
        if g.verdict == Verdict::Bartlized {
            prop_assert!(g.cond1.as_ref().unwrap().max_abs() < g.tolerance1.unwrap());
            prop_assert!(g.cond2.as_ref().unwrap().max_abs() < g.tolerance2.unwrap());
        }
    }
}
