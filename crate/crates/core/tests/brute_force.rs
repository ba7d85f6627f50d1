//! Every estimator against direct double loops on small random datasets.

mod common;

use common::naive::{self, close, Sample};
use rand::Rng;
use releff_core::estimators::*;
use releff_core::kernels::KernelConfig;
use releff_core::seeding::stream_rng;

fn random_sample(seed: u64) -> Sample {
    let mut rng = stream_rng(seed, 0);
    let n = rng.random_range(1..=50);
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut t: Vec<f64> = (0..n).map(|i| (0.4 * x[i] - 0.3 * y[i]).exp() * rng.random_range(0.05..2.0)).collect();
    // Some datasets carry tied durations.
    if n > 3 && rng.random_bool(0.3) {
        t[1] = t[0];
        t[n - 1] = t[0];
    }
    Sample { t, x, y }
}

fn to_data(s: &Sample) -> SurvivalData {
    SurvivalData::new(s.t.clone(), s.x.clone(), s.y.clone()).unwrap()
}

#[test]
fn pointwise_estimators_match_double_loops() {
    for seed in 0..100 {
        let s = random_sample(seed);
        let d = to_data(&s);
        let mut rng = stream_rng(seed, 1);
        let (hx, hy) = (rng.random_range(0.2..1.2), rng.random_range(0.2..1.2));
        let k = KernelConfig::new(hx, hy).unwrap();
        for _ in 0..5 {
            let (x, y) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let t = if rng.random_bool(0.5) { s.t[rng.random_range(0..s.t.len())] } else { rng.random_range(0.0..3.0) };

            match naive::survival(&s, t, x, y, hx, hy) {
                Some((v, vx, vy)) => {
                    assert!(close(survival_nw(&d, t, x, y, &k).unwrap().unwrap(), v, 1e-12));
                    assert!(close(survival_deriv_x(&d, t, x, y, &k).unwrap().unwrap(), vx, 1e-12));
                    assert!(close(survival_deriv_y(&d, t, x, y, &k).unwrap().unwrap(), vy, 1e-12));
                }
                None => assert_eq!(survival_nw(&d, t, x, y, &k).unwrap(), None),
            }

            let (v, vx, vy, undefined) = naive::nelson_aalen(&s, t, x, y, hx, hy);
            let na = nelson_aalen(&d, t, x, y, &k).unwrap();
            assert!(close(na.value, v, 1e-12), "seed {seed}: {} vs {v}", na.value);
            assert_eq!(na.undefined_terms, undefined, "seed {seed}");
            assert!(close(nelson_aalen_deriv_x(&d, t, x, y, &k).unwrap().value, vx, 1e-12));
            assert!(close(nelson_aalen_deriv_y(&d, t, x, y, &k).unwrap().value, vy, 1e-12));

            for &tj in naive::distinct_times(&s).iter() {
                let got = conditional_hazard(&d, tj, x, y, &k).unwrap();
                match naive::hazard(&s, tj, x, y, hx, hy) {
                    Some(h) => assert!(close(got.unwrap(), h, 1e-12)),
                    None => assert_eq!(got, None),
                }
            }

            match naive::nw(&s, x, y, hx, hy) {
                Some((m, mx, my)) => {
                    assert!(close(nw_mean(&d, x, y, &k).unwrap().unwrap(), m, 1e-12));
                    assert!(close(nw_mean_deriv_x(&d, x, y, &k).unwrap().unwrap(), mx, 1e-12));
                    assert!(close(nw_mean_deriv_y(&d, x, y, &k).unwrap().unwrap(), my, 1e-12));
                }
                None => assert_eq!(nw_mean(&d, x, y, &k).unwrap(), None),
            }
        }
    }
}

#[test]
fn eta_estimators_match_double_loops() {
    let grid = GridSpec::new(0.05, 2.5, 60).unwrap();
    let points = grid.points();
    let trim = TrimConfig::boundary_and_denominator(0.1, 2.0, 0.02).unwrap();
    let keep = |t: f64, den: f64| (0.1..=2.0).contains(&t) && den.abs() >= 0.02 && den.is_finite();
    for seed in 0..100 {
        let s = random_sample(seed + 1000);
        let d = to_data(&s);
        let h = 0.4 + 0.8 * (seed as f64 / 100.0);
        let k = KernelConfig::new(h, 1.1 * h).unwrap();

        let cmp = |got: releff_core::Result<EtaEstimate>, want: Option<(f64, usize)>| match want {
            Some((v, used)) => {
                let e = got.unwrap();
                assert!(close(e.value, v, 1e-12), "seed {seed}: {} vs {v}", e.value);
                assert_eq!(e.n_grid_used, used);
            }
            None => assert!(got.is_err()),
        };
        cmp(eta_pi_bar(&d, &grid, &trim, &k), naive::eta_pi_bar(&s, &points, h, 1.1 * h, &keep));
        cmp(eta_lambda_bar(&d, &grid, &trim, &k), naive::eta_lambda_bar(&s, &points, h, 1.1 * h, &keep));
        cmp(eta_bar(&d, &k), naive::eta_bar(&s, h, 1.1 * h));

        let (xb, yb) = naive::means(&s);
        match naive::eta_m(&s, xb, yb, h, 1.1 * h) {
            Some(v) => assert!(close(eta_m_at(&d, xb, yb, &k).unwrap().value, v, 1e-12)),
            None => assert!(eta_m_at(&d, xb, yb, &k).is_err()),
        }
    }
}
