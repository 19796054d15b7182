//! Monte Carlo estimation, progress-inequality checks, rate fits and sweeps.

pub mod checks;
pub mod fit;
pub mod mc;
pub mod sweep;

pub use checks::{
    check_per_epoch_bound, check_per_iteration_bound, check_quadratic_epoch_bound, BoundCheck, ProgressBound, Verdict,
};
pub use fit::{fit_rate, RateFit};
pub use mc::{mc_distance_sq, mc_distance_sq_detailed, run_trials, trial_seed, DistanceSummary, McEstimate, MIN_TRIALS};
pub use sweep::{read_csv, sweep, write_csv, ExperimentConfig, SweepRow, CSV_HEADER};
