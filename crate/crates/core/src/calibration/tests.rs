use approx::assert_relative_eq;
use proptest::prelude::*;

use super::*;
use crate::io::{build_timeline, default_universe};
use crate::model::{simulate, Exchange, FiredStress, FiringEntry, Normalization, Universe};

fn synthetic(days: usize, seed: u64) -> (ObservedPanel, crate::model::ReturnPanel) {
    let cfg = default_universe();
    let tl = build_timeline(&cfg.universe, &cfg.calendar.dates(days)).unwrap();
    let panel = simulate(&cfg.universe, &tl, ModelParams::reference(), seed, Modes::default()).unwrap();
    (panel.observed(), panel)
}

#[test]
fn grid_validation() {
    assert!(CalibrationGrid::new(vec![], vec![20.0], vec![0.02]).is_err());
    assert!(CalibrationGrid::new(vec![0.03, 0.02], vec![20.0], vec![0.02]).is_err());
    assert!(CalibrationGrid::new(vec![0.03, 0.03], vec![20.0], vec![0.02]).is_err());
    assert!(CalibrationGrid::new(vec![0.0], vec![20.0], vec![0.02]).is_err());
    assert!(CalibrationGrid::new(vec![0.03], vec![f64::INFINITY], vec![0.02]).is_err());
    assert!(CalibrationGrid::new(vec![0.03], vec![20.0], vec![0.0, 0.02]).is_ok());
    let g = CalibrationGrid::from_variances(vec![0.03], vec![20.0], vec![0.0004, 0.0009]).unwrap();
    assert_relative_eq!(g.sigma_values()[1], 0.03, epsilon = 1e-15);
    assert_eq!(g.len(), 2);
}

#[test]
fn residual_arithmetic() {
    // transfer 0.025 (see the single-contributor model example), observed 0.035
    let u = Universe::new(vec![
        Exchange::new("A", "A", 1.0, 0.0, 9.0, 17.0).unwrap(),
        Exchange::new("B", "B", 1.0, 0.0, 9.0, 17.0).unwrap(),
    ])
    .unwrap();
    let entry = FiringEntry {
        event: crate::model::MarketEvent {
            exchange: 0,
            kind: crate::model::EventKind::Open,
            utc_time: 24.0,
            seq: 0,
            day: 0,
        },
        observed: 0.035,
        fired: vec![FiredStress {
            exchange: 1,
            r_cum: 0.05,
            lag: 0.0,
        }],
    };
    let t = crate::model::transfer_from_history(&entry, &u.capitalizations(), 1.0 / std::f64::consts::LN_2, 20.0, Normalization::Contributors);
    assert_relative_eq!(t, 0.025, epsilon = 1e-15);
    assert_relative_eq!(entry.observed - t, 0.010, epsilon = 1e-15);
}

#[test]
fn zero_coupling_residuals_equal_observed() {
    let (observed, _) = synthetic(5, 3);
    // threshold far above any move: nothing ever fires
    let params = ModelParams::new(0.8, 20.0, 10.0, 0.02).unwrap();
    let res = residuals(&observed, params, Modes::default()).unwrap();
    assert_eq!(res, observed.returns());
}

#[test]
fn residuals_reproduce_draws() {
    let (observed, panel) = synthetic(40, 11);
    let res = residuals(&observed, ModelParams::reference(), Modes::default()).unwrap();
    for (r, rec) in res.iter().zip(panel.records()) {
        assert!((r.unwrap() - rec.as_ref().unwrap().eta).abs() <= 1e-12);
    }
}

#[test]
fn single_point_grid() {
    let (observed, _) = synthetic(60, 5);
    let grid = CalibrationGrid::new(vec![0.03], vec![20.0], vec![0.0006f64.sqrt()]).unwrap();
    let opts = CalibrationOptions::default();
    let res = grid_calibrate(&observed, &grid, Modes::default(), &opts).unwrap();
    assert_eq!(res.table.len(), 1);
    assert_eq!(res.params.r_c, 0.03);
    assert_eq!(res.params.tau, 20.0);
    assert_eq!(res.table[0].status, "ok");
    assert!(res.table[0].closed_form_gamma.is_some());
    assert_eq!(res.residuals.len(), observed.timeline().len());
    assert_eq!(res.selected().log_likelihood, Some(res.log_likelihood));
    for b in &res.fit.histogram.bins {
        assert_eq!(b.included, b.count >= DEFAULT_MIN_OCCUPANCY);
    }
}

#[test]
fn all_points_failing_is_reported() {
    let (observed, _) = synthetic(5, 3);
    let grid = CalibrationGrid::new(vec![5.0, 10.0], vec![20.0], vec![0.02]).unwrap();
    match grid_calibrate(&observed, &grid, Modes::default(), &CalibrationOptions::default()) {
        Err(CalibrationError::AllPointsFailed(points)) => {
            assert_eq!(points.len(), 2);
            assert!(points[0].contains("gamma unidentifiable"), "{points:?}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn zero_sigma_point_fails_but_others_score() {
    let (observed, _) = synthetic(30, 5);
    let grid = CalibrationGrid::new(vec![0.03], vec![20.0], vec![0.0, 0.0245]).unwrap();
    let res = grid_calibrate(&observed, &grid, Modes::default(), &CalibrationOptions::default()).unwrap();
    assert!(res.table[0].log_likelihood.is_none());
    assert_eq!(res.params.sigma, 0.0245);
}

#[test]
fn selects_true_point_and_is_exhaustive() {
    let (observed, _) = synthetic(300, 2024);
    let grid = CalibrationGrid::from_variances(vec![0.02, 0.03, 0.04], vec![20.0], vec![0.0004, 0.0006, 0.0008]).unwrap();
    let opts = CalibrationOptions {
        report_closed_form: false,
        ..Default::default()
    };
    let a = grid_calibrate(&observed, &grid, Modes::default(), &opts).unwrap();
    let b = grid_calibrate(&observed, &grid, Modes::default(), &opts).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.params.r_c, 0.03);
    assert_relative_eq!(a.params.variance(), 0.0006, max_relative = 1e-12);
    assert!((a.params.gamma - 0.8).abs() < 0.3, "{}", a.params.gamma);
    for p in &a.table {
        assert!(p.log_likelihood.unwrap() <= a.log_likelihood);
    }
}

#[test]
fn closed_form_method_is_selectable() {
    let (observed, _) = synthetic(60, 9);
    let grid = CalibrationGrid::new(vec![0.03], vec![20.0], vec![0.0245]).unwrap();
    let opts = CalibrationOptions {
        gamma_method: GammaMethod::ClosedForm,
        ..Default::default()
    };
    let res = grid_calibrate(&observed, &grid, Modes::default(), &opts).unwrap();
    let p = &res.table[0];
    assert_eq!(p.gamma, p.closed_form_gamma);
    assert_eq!(p.closed_form_converged, Some(true));
}

#[test]
fn filtering_never_grows_the_sample() {
    let (observed, _) = synthetic(20, 1);
    let etas: Vec<f64> = observed.returns().iter().flatten().copied().collect();
    for occ in [1, 5, 10, 50] {
        let (_, n) = log_likelihood(&etas, 0.02, LikelihoodMode::FilteredBins, occ, 0.004).unwrap();
        assert!(n <= etas.len());
    }
    let fit = gaussian_fit(&etas, 10, 0.004).unwrap();
    assert!(fit.ks.unwrap().n <= etas.len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn slaved_gamma_invariant_under_cap_rescaling(seed in 0u64..1000, scale in 0.01f64..100.0) {
        let (observed, _) = synthetic(15, seed);
        let caps = observed.universe().capitalizations();
        let scaled: Vec<f64> = caps.iter().map(|k| k * scale).collect();
        let history = crate::model::firing_history(&observed, 0.03, crate::model::Sidedness::TwoSided).unwrap();
        let etas: Vec<Option<f64>> = history.iter().map(|e| e.as_ref().map(|e| e.observed * 0.5)).collect();
        match (slaved_gamma(&history, &caps, 20.0, &etas), slaved_gamma(&history, &scaled, 20.0, &etas)) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0)),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
        }
    }
}
