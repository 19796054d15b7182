//! Shuffled (random-reshuffling) SGD on finite sums of smooth, strongly convex
//! components, with the recurrence bounds used to analyse it and Monte Carlo
//! tooling to check them.
//!
//! ```
//! use rrsgd_core::{make_random_quadratic, mc_distance_sq, StepSchedule};
//!
//! let problem = make_random_quadratic(8, 3, 1.0, 4.0, 7).unwrap();
//! let x0 = problem.default_start(7);
//! let schedule = StepSchedule::two_phase(3.0).unwrap();
//! let est = mc_distance_sq(&problem, &schedule, &x0, 16, 64, 1).unwrap();
//! assert!(est.mean < (&x0 - problem.x_star()).norm_squared());
//! ```

pub mod analysis;
pub mod engine;
pub mod error;
pub mod numerics;
pub mod problems;
pub mod recurrences;
pub mod schedules;

pub use analysis::{
    check_per_epoch_bound, check_per_iteration_bound, check_quadratic_epoch_bound, fit_rate, mc_distance_sq,
    sweep, BoundCheck, ExperimentConfig, McEstimate, RateFit, SweepRow, Verdict,
};
pub use engine::{run_sgd, run_with_replacement, run_without_replacement, PermutationStream, RunResult, Sampling};
pub use error::{Error, Result};
pub use problems::{make_random_logcosh, make_random_quadratic, Family, FiniteSumProblem, ProblemSpec};
pub use schedules::{ProblemConstants, StepSchedule};

pub use nalgebra::{DMatrix, DVector};
