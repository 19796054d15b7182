use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run_sgd, RunResult, Sampling};
use crate::error::{invalid, Error, Result};
use crate::numerics::{mean_std, mix_seed};
use crate::problems::FiniteSumProblem;
use crate::schedules::StepSchedule;

pub const MIN_TRIALS: usize = 30;
/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Mean of i.i.d. samples with a 95% normal-approximation half width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub half_width: f64,
    pub std_err: f64,
    pub trials: usize,
    pub seed: u64,
}

impl McEstimate {
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let (mean, std) = mean_std(samples);
        let std_err = std / (samples.len() as f64).sqrt();
        Self {
            mean,
            half_width: Z95 * std_err,
            std_err,
            trials: samples.len(),
            seed,
        }
    }

    /// A known quantity, carried as a zero-width estimate.
    pub fn exact(value: f64, trials: usize, seed: u64) -> Self {
        Self {
            mean: value,
            half_width: 0.0,
            std_err: 0.0,
            trials,
            seed,
        }
    }

    pub fn upper(&self, sigmas: f64) -> f64 {
        self.mean + sigmas * self.std_err
    }

    pub fn lower(&self, sigmas: f64) -> f64 {
        self.mean - sigmas * self.std_err
    }
}

/// Seed of trial `t` under a master seed.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    mix_seed(seed, trial as u64)
}

pub(crate) fn check_trials(trials: usize) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(invalid("trials", format!("need at least {MIN_TRIALS} trials, got {trials}")));
    }
    Ok(())
}

/// Final-distance statistics over independent runs.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSummary {
    pub estimate: McEstimate,
    /// `‖y_K − x*‖²` per trial, in trial order.
    pub samples: Vec<f64>,
    pub exited_fraction: f64,
    pub max_dist: f64,
}

/// Run `trials` independent seeded runs in parallel; results come back in trial order.
pub fn run_trials(
    problem: &FiniteSumProblem,
    schedule: &StepSchedule,
    x0: &DVector<f64>,
    epochs: usize,
    trials: usize,
    seed: u64,
    sampling: Sampling,
) -> Result<Vec<RunResult>> {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = trial_seed(seed, t);
            run_sgd(problem, schedule, x0, epochs, s, sampling, false).map_err(|e| Error::TrialFailed {
                trial: t,
                seed: s,
                source: Box::new(e),
            })
        })
        .collect()
}

pub fn mc_distance_sq_detailed(
    problem: &FiniteSumProblem,
    schedule: &StepSchedule,
    x0: &DVector<f64>,
    epochs: usize,
    trials: usize,
    seed: u64,
    sampling: Sampling,
) -> Result<DistanceSummary> {
    check_trials(trials)?;
    let runs = run_trials(problem, schedule, x0, epochs, trials, seed, sampling)?;
    let samples: Vec<f64> = runs.iter().map(RunResult::final_dist_sq).collect();
    let exited = runs.iter().filter(|r| r.exited_ball).count();
    Ok(DistanceSummary {
        estimate: McEstimate::from_samples(&samples, seed),
        samples,
        exited_fraction: exited as f64 / trials as f64,
        max_dist: runs.iter().map(|r| r.max_dist).fold(0.0, f64::max),
    })
}

/// Monte Carlo estimate of `E‖y_K − x*‖²` for shuffled SGD.
pub fn mc_distance_sq(
    problem: &FiniteSumProblem,
    schedule: &StepSchedule,
    x0: &DVector<f64>,
    epochs: usize,
    trials: usize,
    seed: u64,
) -> Result<McEstimate> {
    Ok(mc_distance_sq_detailed(problem, schedule, x0, epochs, trials, seed, Sampling::WithoutReplacement)?.estimate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::make_random_quadratic;

    #[test]
    fn estimate_from_constant_samples() {
        let e = McEstimate::from_samples(&[2.0; 40], 1);
        assert_eq!((e.mean, e.half_width, e.trials), (2.0, 0.0, 40));
    }

    #[test]
    fn zero_step_gives_exact_start_distance() {
        let p = make_random_quadratic(5, 3, 1.0, 3.0, 6).unwrap();
        let x0 = p.default_start(1);
        let e = mc_distance_sq(&p, &StepSchedule::constant(0.0).unwrap(), &x0, 3, 30, 4).unwrap();
        assert_eq!(e.mean, (&x0 - p.x_star()).norm_squared());
        assert_eq!(e.half_width, 0.0);
    }

    #[test]
    fn too_few_trials() {
        let p = make_random_quadratic(2, 2, 1.0, 3.0, 6).unwrap();
        let x0 = p.default_start(1);
        assert!(mc_distance_sq(&p, &StepSchedule::two_phase(3.0).unwrap(), &x0, 3, 29, 4).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let p = make_random_quadratic(6, 3, 1.0, 4.0, 2).unwrap();
        let x0 = p.default_start(3);
        let s = StepSchedule::two_phase(3.0).unwrap();
        let a = mc_distance_sq(&p, &s, &x0, 5, 64, 17).unwrap();
        let b = mc_distance_sq(&p, &s, &x0, 5, 64, 17).unwrap();
        assert_eq!(a, b);
    }
}
