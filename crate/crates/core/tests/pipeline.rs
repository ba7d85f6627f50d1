//! End-to-end checks from simulated data to estimates.

use proptest::prelude::*;
use releff_core::baselines::{coeff_ratio, fit_baseline, BaselineModel, CensoredSample};
use releff_core::copulas::{CopulaModel, Family};
use releff_core::datagen::{risk_share, sample_single_index, sample_two_hazards, SingleIndexDgp, TwoHazardsDgp, WeibullMargin};
use releff_core::estimators::{eta_bar, eta_m_at, SurvivalData};
use releff_core::inference::{bootstrap_spec_test, cv_bandwidth, BootstrapConfig, CvConfig};
use releff_core::kernels::KernelConfig;
use releff_core::oracle::{single_index_ratio_check, ClosedFormKind, SingleIndexParams};

fn weibull(family: Family, tau: f64) -> SingleIndexDgp {
    SingleIndexDgp {
        margin1: WeibullMargin::new(0.5, 1.0).unwrap(),
        margin2: WeibullMargin::new(1.0, 1.0).unwrap(),
        beta_x: 1.0,
        beta_y: 1.0,
        beta_x2: 0.0,
        copula: CopulaModel::from_tau(family, tau).unwrap(),
    }
}

#[test]
fn single_index_data_give_unit_ratios() {
    let obs = sample_single_index(&weibull(Family::Gumbel, 0.1), 20_000, 17).unwrap();
    let data = SurvivalData::from_observations(&obs).unwrap();
    let k = KernelConfig::uniform(0.3).unwrap();
    let eta = eta_bar(&data, &k).unwrap();
    assert!((eta.value - 1.0).abs() < 0.2, "{}", eta.value);
    let cs = CensoredSample::from_observations(&obs).unwrap();
    for model in [BaselineModel::Cox, BaselineModel::Aft] {
        let r = coeff_ratio(&fit_baseline(model, &cs).unwrap()).unwrap();
        assert!((r - 1.0).abs() < 0.1, "{model:?}: {r}");
    }
    let (xb, yb) = data.covariate_means();
    assert!(eta_m_at(&data, xb, yb, &k).unwrap().value.is_finite());
}

#[test]
fn two_hazards_data_separate_the_estimators() {
    let dgp = TwoHazardsDgp {
        a1: 1.0,
        b1: 1.0,
        a2: 0.5,
        b2: 1.0,
        beta_x: 1.0,
        beta_y: 1.0,
        copula: CopulaModel::from_tau(Family::Clayton, 0.8).unwrap(),
    };
    let obs = sample_two_hazards(&dgp, 20_000, 5).unwrap();
    let share = risk_share(&obs).unwrap();
    assert!(share > 0.0 && share < 1.0);
    let data = SurvivalData::from_observations(&obs).unwrap();
    let eta = eta_bar(&data, &KernelConfig::uniform(0.3).unwrap()).unwrap().value;
    let cs = CensoredSample::from_observations(&obs).unwrap();
    let po = coeff_ratio(&fit_baseline(BaselineModel::Po, &cs).unwrap()).unwrap();
    assert!(eta < 1.0 && po < 1.0);
    assert!(eta - po > 0.03, "eta {eta} po {po}");
}

#[test]
fn cv_then_bootstrap_workflow() {
    let obs = sample_single_index(&weibull(Family::Clayton, 0.8), 1500, 2).unwrap();
    let data = SurvivalData::from_observations(&obs).unwrap();
    let cv = cv_bandwidth(&data, &CvConfig::new(5, vec![0.3, 0.5, 0.8], 1)).unwrap();
    let r = bootstrap_spec_test(&obs, BaselineModel::Cox, &cv.kernel, &BootstrapConfig::new(30, 4)).unwrap();
    assert_eq!(r.requested, 30);
    assert!((0.0..=1.0).contains(&r.p_value));
}

#[test]
fn swapping_covariates_inverts_every_ratio() {
    let obs = sample_single_index(
        &SingleIndexDgp {
            beta_x: 0.7,
            beta_y: 1.4,
            ..weibull(Family::Gumbel, 0.5)
        },
        3000,
        9,
    )
    .unwrap();
    let data = SurvivalData::from_observations(&obs).unwrap();
    let k = KernelConfig::new(0.4, 0.5).unwrap();
    let a = eta_bar(&data, &k).unwrap().value;
    let b = eta_bar(&data.swapped(), &k.swapped()).unwrap().value;
    assert!((a * b - 1.0).abs() <= 4.0 * f64::EPSILON);
    let cs = CensoredSample::from_observations(&obs).unwrap();
    for model in [BaselineModel::Cox, BaselineModel::Aft, BaselineModel::Po] {
        let p = coeff_ratio(&fit_baseline(model, &cs).unwrap()).unwrap();
        let q = coeff_ratio(&fit_baseline(model, &cs.swapped()).unwrap()).unwrap();
        assert!((p * q - 1.0).abs() < 1e-9, "{model:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]
    #[test]
    fn single_index_margins_have_coefficient_ratio_effects(
        bx in -3.0f64..3.0,
        by in prop::sample::select(vec![-2.5, -1.0, -0.3, 0.4, 1.0, 2.0]),
        t in 0.05f64..3.0,
        x in -2.0f64..2.0,
        y in -2.0f64..2.0,
    ) {
        let params = SingleIndexParams { baseline: WeibullMargin::new(0.5, 1.0).unwrap(), beta_x: bx, beta_y: by };
        for kind in [ClosedFormKind::CoxPh, ClosedFormKind::Po, ClosedFormKind::Aft] {
            let (analytic, coef) = single_index_ratio_check(kind, &params, t, x, y).unwrap();
            prop_assert!((analytic - coef).abs() <= 1e-10 * coef.abs().max(1.0));
        }
    }
}
