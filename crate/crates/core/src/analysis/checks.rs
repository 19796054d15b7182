//! Monte Carlo checks of the per-iteration and per-epoch progress inequalities.
//!
//! Expectations are conditional on the epoch start: the start state is held
//! fixed and only that epoch's permutation is resampled. Both sides of an
//! inequality are computed from the same permutation draws. A check passes when
//! the 3σ upper edge of the left side sits below the 3σ lower edge of the right
//! side; it fails only when the whole left interval lies above the right one.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mc::{check_trials, trial_seed, McEstimate};
use crate::engine::PermutationStream;
use crate::error::{invalid, Error, Result};
use crate::problems::{Family, FiniteSumProblem};

pub const GUARD_SIGMAS: f64 = 3.0;
pub const RELATIVE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Inconclusive,
    Violated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProgressBound {
    /// one step inside an epoch
    PerIteration,
    /// one epoch, general strongly convex cost
    PerEpoch,
    /// one epoch, quadratic cost
    QuadraticEpoch,
}

impl ProgressBound {
    pub fn as_str(self) -> &'static str {
        match self {
            ProgressBound::PerIteration => "per_iteration",
            ProgressBound::PerEpoch => "per_epoch",
            ProgressBound::QuadraticEpoch => "quadratic_epoch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub bound: ProgressBound,
    pub eta: f64,
    pub lhs: McEstimate,
    pub rhs: McEstimate,
    pub slack: f64,
    pub verdict: Verdict,
    /// `G` the right side was evaluated with.
    pub g: f64,
    /// Radius `G` is certified on: the farthest any sampled iterate went from `x*`.
    pub radius: f64,
    /// Some sampled iterate left the problem's certification ball.
    pub locality_breach: bool,
}

impl BoundCheck {
    pub fn holds_within_ci(&self) -> bool {
        self.verdict == Verdict::Holds
    }
}

fn verdict(lhs: &McEstimate, rhs: &McEstimate) -> (Verdict, f64) {
    let slack = RELATIVE_SLACK * 1f64.max(lhs.mean.abs()).max(rhs.mean.abs());
    let v = if lhs.upper(GUARD_SIGMAS) <= rhs.lower(GUARD_SIGMAS) + slack {
        Verdict::Holds
    } else if lhs.lower(GUARD_SIGMAS) > rhs.upper(GUARD_SIGMAS) + slack {
        Verdict::Violated
    } else {
        Verdict::Inconclusive
    };
    (v, slack)
}

fn check_step(problem: &FiniteSumProblem, eta: f64) -> Result<()> {
    if !eta.is_finite() || eta < 0.0 {
        return Err(invalid("eta", "must be finite and >= 0"));
    }
    let limit = 2.0 / problem.l();
    if eta > limit * (1.0 + 1e-12) {
        return Err(Error::StepTooLarge { max_step: eta, limit });
    }
    Ok(())
}

fn check_state(problem: &FiniteSumProblem, x: &DVector<f64>) -> Result<()> {
    if x.len() != problem.d() {
        return Err(invalid("state", format!("expected dimension {}", problem.d())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("state"));
    }
    Ok(())
}

/// Outcome of replaying `steps` constant-step iterations from `start`.
struct Replay {
    dist_sq: Vec<f64>,
    max_dist: f64,
}

fn replay(problem: &FiniteSumProblem, start: &DVector<f64>, perm: &[usize], eta: f64, steps: usize) -> Replay {
    let x_star = problem.x_star();
    let mut x = start.clone();
    let mut grad = DVector::zeros(problem.d());
    let mut dist_sq = Vec::with_capacity(steps + 1);
    let d0 = (&x - x_star).norm_squared();
    dist_sq.push(d0);
    let mut max_dist = d0.sqrt();
    for &index in &perm[..steps] {
        problem.gradient_into(index, &x, &mut grad);
        x.axpy(-eta, &grad, 1.0);
        let d = (&x - x_star).norm_squared();
        max_dist = max_dist.max(d.sqrt());
        dist_sq.push(d);
    }
    Replay { dist_sq, max_dist }
}

fn replays(
    problem: &FiniteSumProblem,
    start: &DVector<f64>,
    eta: f64,
    steps: usize,
    epoch: usize,
    trials: usize,
    seed: u64,
) -> Vec<Replay> {
    let n = problem.n();
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let perm = PermutationStream::permutation(n, trial_seed(seed, t), epoch.saturating_sub(1) as u64);
            replay(problem, start, &perm, eta, steps)
        })
        .collect()
}

fn certified_g(problem: &FiniteSumProblem, runs: &[Replay]) -> (f64, f64) {
    let radius = runs.iter().map(|r| r.max_dist).fold(0.0, f64::max);
    (problem.effective_lipschitz_g(radius), radius)
}

/// Checks
/// `E‖x_{k,i+1}−x*‖² ≤ (1 − ημ/2) E‖x_{k,i}−x*‖² + 3η²G² + 4η³κLG²`
/// where the epoch starts at `state` and `i` steps (zero-based, `i < n`) have
/// already been taken with step `eta`. `k` selects the permutation stream.
pub fn check_per_iteration_bound(
    problem: &FiniteSumProblem,
    state: &DVector<f64>,
    k: usize,
    i: usize,
    eta: f64,
    trials: usize,
    seed: u64,
) -> Result<BoundCheck> {
    check_trials(trials)?;
    check_step(problem, eta)?;
    check_state(problem, state)?;
    if i >= problem.n() {
        return Err(invalid("i", format!("need i < n = {}", problem.n())));
    }
    let runs = replays(problem, state, eta, i + 1, k, trials, seed);
    let (g, radius) = certified_g(problem, &runs);
    let (mu, l, kappa) = (problem.mu(), problem.l(), problem.kappa());
    let tail = 3.0 * eta * eta * g * g + 4.0 * eta.powi(3) * kappa * l * g * g;
    let lhs: Vec<f64> = runs.iter().map(|r| r.dist_sq[i + 1]).collect();
    let rhs: Vec<f64> = runs.iter().map(|r| (1.0 - eta * mu / 2.0) * r.dist_sq[i] + tail).collect();
    let lhs = McEstimate::from_samples(&lhs, seed);
    let rhs = McEstimate::from_samples(&rhs, seed);
    let (verdict, slack) = verdict(&lhs, &rhs);
    Ok(BoundCheck {
        bound: ProgressBound::PerIteration,
        eta,
        lhs,
        rhs,
        slack,
        verdict,
        g,
        radius,
        locality_breach: radius > problem.radius(),
    })
}

fn epoch_check(
    problem: &FiniteSumProblem,
    y_k: &DVector<f64>,
    eta: f64,
    trials: usize,
    seed: u64,
    bound: ProgressBound,
) -> Result<BoundCheck> {
    check_trials(trials)?;
    check_step(problem, eta)?;
    check_state(problem, y_k)?;
    let n = problem.n();
    let runs = replays(problem, y_k, eta, n, 1, trials, seed);
    let (g, radius) = certified_g(problem, &runs);
    let (mu, l, kappa) = (problem.mu(), problem.l(), problem.kappa());
    let nf = n as f64;
    let ne = nf * eta;
    let dist0 = (y_k - problem.x_star()).norm_squared();
    let g2 = g * g;
    let rhs = match bound {
        ProgressBound::PerEpoch => {
            let gap = problem.suboptimality(y_k).max(0.0);
            (1.0 - 0.75 * ne * mu + ne * ne * l * l) * dist0 - 2.0 * ne * (1.0 - 4.0 * ne * kappa * l) * gap
                + 20.0 * nf * nf * eta.powi(3) * kappa * l * g2
                + 5.0 * nf.powi(3) * eta.powi(4) * l * l * g2
        }
        ProgressBound::QuadraticEpoch => {
            (1.0 - 1.5 * ne * mu + 5.0 * ne * ne * l * l + 8.0 * ne.powi(3) * kappa * l.powi(3)) * dist0
                + 10.0 * nf.powi(3) * eta.powi(4) * l * l * g2
                + 40.0 * nf.powi(4) * eta.powi(5) * kappa * l.powi(3) * g2
                + 32.0 * nf * eta.powi(3) * kappa * l * g2
        }
        ProgressBound::PerIteration => unreachable!("per-iteration bound has its own driver"),
    };
    let lhs: Vec<f64> = runs.iter().map(|r| r.dist_sq[n]).collect();
    let lhs = McEstimate::from_samples(&lhs, seed);
    let rhs = McEstimate::exact(rhs, trials, seed);
    let (verdict, slack) = verdict(&lhs, &rhs);
    Ok(BoundCheck {
        bound,
        eta,
        lhs,
        rhs,
        slack,
        verdict,
        g,
        radius,
        locality_breach: radius > problem.radius(),
    })
}

/// Checks the per-epoch inequality for constant step `eta` from a fixed `y_k`:
/// `E‖y_{k+1}−x*‖² ≤ (1 − 3nημ/4 + n²η²L²)‖y_k−x*‖² − 2nη(1 − 4nηκL)(F(y_k)−F*)
///  + 20n²η³κLG² + 5n³η⁴L²G²`.
pub fn check_per_epoch_bound(
    problem: &FiniteSumProblem,
    y_k: &DVector<f64>,
    eta: f64,
    trials: usize,
    seed: u64,
) -> Result<BoundCheck> {
    epoch_check(problem, y_k, eta, trials, seed, ProgressBound::PerEpoch)
}

/// Quadratic-cost per-epoch inequality:
/// `E‖y_{k+1}−x*‖² ≤ (1 − 3nημ/2 + 5n²η²L² + 8n³η³κL³)‖y_k−x*‖²
///  + 10n³η⁴L²G² + 40n⁴η⁵κL³G² + 32nη³κLG²`.
pub fn check_quadratic_epoch_bound(
    problem: &FiniteSumProblem,
    y_k: &DVector<f64>,
    eta: f64,
    trials: usize,
    seed: u64,
) -> Result<BoundCheck> {
    if problem.family() != Family::Quadratic {
        return Err(Error::NotQuadratic);
    }
    epoch_check(problem, y_k, eta, trials, seed, ProgressBound::QuadraticEpoch)
}
