use proptest::prelude::*;

use rrsgd_core::analysis::{
    check_per_epoch_bound, check_per_iteration_bound, check_quadratic_epoch_bound, fit_rate, mc_distance_sq, sweep,
    ExperimentConfig,
};
use rrsgd_core::engine::Sampling;
use rrsgd_core::problems::{make_random_logcosh, make_random_quadratic, Family};
use rrsgd_core::schedules::StepSchedule;

const TRIALS: usize = 20_000;

#[test]
fn per_iteration_example() {
    let p = make_random_quadratic(6, 3, 1.0, 4.0, 42).unwrap();
    let x = p.default_start(1);
    let r = check_per_iteration_bound(&p, &x, 1, 2, 0.5 / p.l(), TRIALS, 3).unwrap();
    assert!(r.holds_within_ci(), "{r:?}");
    assert!(!r.locality_breach);
}

#[test]
fn per_epoch_examples() {
    let q = make_random_quadratic(6, 3, 1.0, 4.0, 43).unwrap();
    let eta = 1.0 / (8.0 * 6.0 * q.kappa() * q.l());
    assert!(check_per_epoch_bound(&q, &q.default_start(2), eta, TRIALS, 4).unwrap().holds_within_ci());
    let lc = make_random_logcosh(6, 3, 1.0, 4.0, 44).unwrap();
    let eta = 1.0 / (8.0 * 6.0 * lc.kappa() * lc.l());
    assert!(check_per_epoch_bound(&lc, &lc.default_start(2), eta, TRIALS, 5).unwrap().holds_within_ci());
    let eta = 1.0 / (16.0 * 6.0 * q.kappa() * q.l());
    assert!(check_quadratic_epoch_bound(&q, &q.default_start(3), eta, TRIALS, 6).unwrap().holds_within_ci());
}

#[test]
fn single_component_at_optimum_has_zero_distance() {
    let p = make_random_quadratic(1, 1, 2.0, 2.0, 1).unwrap();
    let est = mc_distance_sq(&p, &StepSchedule::two_phase(3.0).unwrap(), p.x_star(), 5, 30, 1).unwrap();
    assert!(est.mean < 1e-28);
    assert_eq!(est.half_width, 0.0);
}

#[test]
fn fit_on_power_mixture() {
    let pts: Vec<(f64, f64)> = [8.0, 16.0, 32.0, 64.0, 128.0].iter().map(|&s: &f64| (s, s.powi(-2) + s.powi(-3))).collect();
    let f = fit_rate(&pts).unwrap();
    assert!(f.slope > -3.0 && f.slope < -2.0);
}

#[test]
fn one_cell_sweep_is_one_estimate() {
    let cfg = ExperimentConfig {
        family: Family::Quadratic,
        mu: 1.0,
        l: 4.0,
        d: 3,
        n_grid: vec![6],
        k_grid: vec![5],
        schedules: vec![StepSchedule::two_phase(3.0).unwrap()],
        trials: 40,
        master_seed: 9,
        output_path: None,
        radius: None,
        sampling: Sampling::WithoutReplacement,
    };
    let rows = sweep(&cfg).unwrap();
    assert_eq!(rows.len(), 1);
    let spec = cfg.problem_spec(6);
    let p = spec.build().unwrap();
    let est = mc_distance_sq(&p, &cfg.schedules[0], &p.default_start(spec.seed), 5, 40, rows[0].seed).unwrap();
    assert_eq!(rows[0].mean, est.mean);
    assert_eq!(rows[0].half_width, est.half_width);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fit_slope_ignores_value_scale(c in 1e-6f64..1e6, p in -4.0f64..1.0) {
        let pts: Vec<(f64, f64)> = [2.0, 4.0, 8.0, 16.0].iter().map(|&s: &f64| (s, s.powf(p) * (1.0 + 0.1 * s.sin()))).collect();
        let scaled: Vec<(f64, f64)> = pts.iter().map(|&(s, v)| (s, c * v)).collect();
        let (a, b) = (fit_rate(&pts).unwrap(), fit_rate(&scaled).unwrap());
        prop_assert!((a.slope - b.slope).abs() < 1e-9);
        prop_assert!((b.intercept - a.intercept - c.ln()).abs() < 1e-9);
    }
}
