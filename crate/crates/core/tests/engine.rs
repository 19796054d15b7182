use nalgebra::DVector;
use proptest::prelude::*;

use rrsgd_core::analysis::{fit_rate, mc_distance_sq_detailed};
use rrsgd_core::engine::{epoch_gradient_deviation, run_sgd, run_with_replacement, run_without_replacement, PermutationStream, Sampling};
use rrsgd_core::problems::{make_random_quadratic, FiniteSumProblem, QuadraticComponent};
use rrsgd_core::schedules::{ProblemConstants, StepSchedule};
use rrsgd_core::Error;

fn scalar_quadratic(mu: f64, minimizer: f64) -> FiniteSumProblem {
    let c = QuadraticComponent::new(nalgebra::DMatrix::from_element(1, 1, mu), DVector::from_element(1, mu * minimizer)).unwrap();
    FiniteSumProblem::from_quadratics(vec![c], mu, mu).unwrap()
}

#[test]
fn single_component_geometric_recursion() {
    let (mu, eta, x_star) = (2.0, 0.3, 1.5);
    let p = scalar_quadratic(mu, x_star);
    let x0 = DVector::from_element(1, -0.5);
    let run = run_without_replacement(&p, &StepSchedule::constant(eta).unwrap(), &x0, 40, 9, false).unwrap();
    for (k, y) in run.y.iter().enumerate() {
        let closed = x_star + (1.0 - mu * eta).powi(k as i32) * (-0.5 - x_star);
        assert!((y[0] - closed).abs() <= 1e-12 * closed.abs().max(1.0), "k={k}");
    }
}

#[test]
fn single_component_sampling_modes_agree() {
    let p = scalar_quadratic(1.0, 0.0);
    let x0 = DVector::from_element(1, 1.0);
    let s = StepSchedule::two_phase(3.0).unwrap();
    let a = run_without_replacement(&p, &s, &x0, 10, 4, false).unwrap();
    let b = run_with_replacement(&p, &s, &x0, 10, 4).unwrap();
    assert_eq!(a.y, b.y);
}

#[test]
fn zero_step_stays_put() {
    let p = make_random_quadratic(5, 3, 1.0, 3.0, 2).unwrap();
    let x0 = p.default_start(1);
    for sampling in [Sampling::WithoutReplacement, Sampling::WithReplacement] {
        let r = run_sgd(&p, &StepSchedule::constant(0.0).unwrap(), &x0, 3, 1, sampling, false).unwrap();
        assert_eq!(r.y.last().unwrap().as_slice(), x0.as_slice());
    }
}

#[test]
fn recorded_iterates_and_budget() {
    let p = make_random_quadratic(5, 3, 1.0, 3.0, 2).unwrap();
    let x0 = p.default_start(1);
    let r = run_without_replacement(&p, &StepSchedule::two_phase(3.0).unwrap(), &x0, 4, 1, true).unwrap();
    assert_eq!(r.grad_evals, 20);
    assert_eq!(r.iterates.as_ref().unwrap().len(), 21);
    assert_eq!(r.iterates.as_ref().unwrap()[20], *r.y.last().unwrap());
    assert_eq!(r.dist_sq.len(), 5);
}

#[test]
fn unsafe_steps_and_divergence_are_reported() {
    let p = make_random_quadratic(3, 2, 1.0, 2.0, 2).unwrap();
    let x0 = p.default_start(1);
    let err = run_without_replacement(&p, &StepSchedule::constant(1.5).unwrap(), &x0, 3, 1, false).unwrap_err();
    assert!(matches!(err, Error::StepTooLarge { .. }));
    // at exactly 2/L the top mode oscillates without decaying; it doesn't blow up
    assert!(run_without_replacement(&p, &StepSchedule::constant(1.0).unwrap(), &x0, 3, 1, false).is_ok());
}

#[test]
fn permutation_streams_are_bijections() {
    let mut stream = PermutationStream::new(7, 3);
    for _ in 0..200 {
        let mut p = stream.shuffle();
        p.sort_unstable();
        assert_eq!(p, (0..7).collect::<Vec<_>>());
    }
    assert_eq!(PermutationStream::at_epoch(7, 3, 5).shuffle(), PermutationStream::permutation(7, 3, 4));
}

#[test]
fn with_replacement_baseline_rate() {
    // mean distance over 200 seeds against total steps nK
    let p = make_random_quadratic(8, 3, 1.0, 4.0, 31).unwrap();
    let x0 = p.default_start(31);
    let s = StepSchedule::per_iteration(2.0).unwrap();
    let points: Vec<(f64, f64)> = [16usize, 32, 64, 128, 256]
        .iter()
        .map(|&k| {
            let est = mc_distance_sq_detailed(&p, &s, &x0, k, 200, 77, Sampling::WithReplacement).unwrap();
            ((8 * k) as f64, est.estimate.mean)
        })
        .collect();
    let fit = fit_rate(&points).unwrap();
    assert!(fit.slope > -1.3 && fit.slope < -0.7, "slope {}", fit.slope);
}

#[test]
fn epoch_deviation_examples() {
    let p = make_random_quadratic(8, 3, 1.0, 4.0, 5).unwrap();
    let x = p.default_start(2);
    let perm = PermutationStream::permutation(8, 1, 2);
    let s = StepSchedule::two_phase(3.0).unwrap();
    let dev = epoch_gradient_deviation(&p, &x, &perm, &s, 3).unwrap();
    assert!(dev.deviation <= dev.bound + 1e-9 && dev.deviation > 0.0);

    let zero = epoch_gradient_deviation(&p, &x, &perm, &StepSchedule::constant(0.0).unwrap(), 3).unwrap();
    assert!(zero.deviation < 1e-12 && zero.bound == 0.0);

    let one = scalar_quadratic(1.0, 2.0);
    let d = epoch_gradient_deviation(&one, &DVector::from_element(1, 0.0), &[0], &s, 1).unwrap();
    assert_eq!(d.deviation, 0.0);

    assert!(epoch_gradient_deviation(&p, &x, &[0, 0, 1, 2, 3, 4, 5, 6], &s, 3).is_err());
}

#[test]
fn run_result_json_roundtrip() {
    let p = make_random_quadratic(3, 2, 1.0, 2.0, 2).unwrap();
    let r = run_without_replacement(&p, &StepSchedule::two_phase(3.0).unwrap(), &p.default_start(0), 2, 5, false).unwrap();
    let back: rrsgd_core::RunResult = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(back, r);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn runs_are_bit_identical(seed in any::<u64>(), k in 1usize..6) {
        let p = make_random_quadratic(6, 3, 1.0, 5.0, 3).unwrap();
        let x0 = p.default_start(seed);
        let s = StepSchedule::two_phase(4.0).unwrap();
        let a = run_without_replacement(&p, &s, &x0, k, seed, false).unwrap();
        let b = run_without_replacement(&p, &s, &x0, k, seed, false).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn deviation_within_smoothness_bound(seed in any::<u64>(), k in 1usize..20, alpha in 2.1f64..8.0) {
        let p = make_random_quadratic(8, 3, 1.0, 4.0, 5).unwrap();
        let x = p.default_start(seed);
        let perm = PermutationStream::permutation(8, seed, 0);
        let dev = epoch_gradient_deviation(&p, &x, &perm, &StepSchedule::two_phase(alpha).unwrap(), k).unwrap();
        prop_assert!(dev.within_bound());
    }
}

#[test]
fn schedule_max_step_is_grid_max() {
    for (schedule, mu, l, n, want) in [
        (StepSchedule::two_phase(3.0).unwrap(), 1.0, 2.0, 5, Some(6.0 / 7.0)),
        (StepSchedule::per_iteration(2.0).unwrap(), 1.0, 1.0, 4, Some(4.0 / 3.0)),
        (StepSchedule::epoch_only_decay(3.0).unwrap(), 1.0, 3.0, 6, None),
        (StepSchedule::epoch_log_constant(4.0).unwrap(), 1.0, 3.0, 6, None),
        (StepSchedule::constant(0.2).unwrap(), 1.0, 3.0, 6, Some(0.2)),
    ] {
        let epochs = 30;
        let consts = ProblemConstants::new(mu, l, n).unwrap().with_epochs(epochs);
        let grid = (1..=epochs)
            .flat_map(|k| (1..=n).map(move |i| (k, i)))
            .map(|(k, i)| schedule.step_size(&consts, k, i).unwrap())
            .fold(0.0, f64::max);
        let max = schedule.max_step(&consts, epochs).unwrap();
        assert_eq!(max, grid, "{schedule}");
        if let Some(w) = want {
            assert!((max - w).abs() < 1e-15);
        }
        if !matches!(schedule, StepSchedule::Constant { .. } | StepSchedule::EpochLogConstant { .. }) {
            assert!(max <= 2.0 / l);
        }
    }
}
