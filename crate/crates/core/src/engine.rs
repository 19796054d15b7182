//! Shuffled (without-replacement) and i.i.d. (with-replacement) SGD.
//!
//! Epoch `k` draws its randomness from ChaCha8 stream `k` of the run seed, so any
//! single epoch can be replayed without running the ones before it.

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::problems::FiniteSumProblem;
use crate::schedules::{ProblemConstants, StepSchedule};

pub const DIVERGENCE_NORM: f64 = 1e12;
const WITH_REPLACEMENT_STREAM: u64 = 1 << 63;
const SAFETY_SLACK: f64 = 1e-12;

fn epoch_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Reproducible sequence of uniformly random permutations of `0..n`.
#[derive(Debug, Clone)]
pub struct PermutationStream {
    n: usize,
    seed: u64,
    draws: u64,
}

impl PermutationStream {
    pub fn new(n: usize, seed: u64) -> Self {
        Self { n, seed, draws: 0 }
    }

    /// Stream positioned so the next draw is the permutation of epoch `k` (one-based).
    pub fn at_epoch(n: usize, seed: u64, k: usize) -> Self {
        Self {
            n,
            seed,
            draws: k.saturating_sub(1) as u64,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Fisher–Yates permutation for draw index `draw`; does not touch any stream state.
    pub fn permutation(n: usize, seed: u64, draw: u64) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut epoch_rng(seed, draw));
        perm
    }

    pub fn shuffle(&mut self) -> Vec<usize> {
        let perm = Self::permutation(self.n, self.seed, self.draws);
        self.draws += 1;
        perm
    }
}

impl Iterator for PermutationStream {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        Some(self.shuffle())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    /// Epoch outputs `y_0 = x₀, y_1, …, y_K`.
    pub y: Vec<Vec<f64>>,
    /// `‖y_k − x*‖²` for `k = 0..=K`.
    pub dist_sq: Vec<f64>,
    pub grad_evals: u64,
    /// Whether any iterate left `B(x*, R)`.
    pub exited_ball: bool,
    /// Largest `‖x − x*‖` over every iterate of the run.
    pub max_dist: f64,
    pub seed: u64,
    /// Every inner iterate, only when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterates: Option<Vec<Vec<f64>>>,
}

impl RunResult {
    pub fn final_dist_sq(&self) -> f64 {
        *self.dist_sq.last().expect("dist_sq always holds y_0")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// a fresh permutation every epoch
    WithoutReplacement,
    /// i.i.d. uniform indices, `n` per epoch
    WithReplacement,
}

/// Refuse schedules whose largest step exceeds `2/L`.
pub fn check_step_safety(problem: &FiniteSumProblem, schedule: &StepSchedule, epochs: usize) -> Result<f64> {
    schedule.validate()?;
    let consts = ProblemConstants::of(problem).with_epochs(epochs);
    let max_step = schedule.max_step(&consts, epochs)?;
    let limit = 2.0 / problem.l();
    if max_step > limit * (1.0 + SAFETY_SLACK) {
        return Err(Error::StepTooLarge { max_step, limit });
    }
    Ok(max_step)
}

/// Shuffled SGD: `K` epochs, each one pass over a fresh permutation.
pub fn run_without_replacement(
    problem: &FiniteSumProblem,
    schedule: &StepSchedule,
    x0: &DVector<f64>,
    epochs: usize,
    seed: u64,
    record_iterates: bool,
) -> Result<RunResult> {
    run_sgd(problem, schedule, x0, epochs, seed, Sampling::WithoutReplacement, record_iterates)
}

/// Baseline SGD with i.i.d. uniform indices, `nK` steps so the gradient budget
/// matches a `K`-epoch shuffled run.
pub fn run_with_replacement(
    problem: &FiniteSumProblem,
    schedule: &StepSchedule,
    x0: &DVector<f64>,
    epochs: usize,
    seed: u64,
) -> Result<RunResult> {
    run_sgd(problem, schedule, x0, epochs, seed, Sampling::WithReplacement, false)
}

pub fn run_sgd(
    problem: &FiniteSumProblem,
    schedule: &StepSchedule,
    x0: &DVector<f64>,
    epochs: usize,
    seed: u64,
    sampling: Sampling,
    record_iterates: bool,
) -> Result<RunResult> {
    if epochs == 0 {
        return Err(invalid("K", "at least one epoch is required"));
    }
    if x0.len() != problem.d() {
        return Err(invalid("x0", format!("expected dimension {}, got {}", problem.d(), x0.len())));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("x0"));
    }
    check_step_safety(problem, schedule, epochs)?;

    let n = problem.n();
    let consts = ProblemConstants::of(problem).with_epochs(epochs);
    let x_star = problem.x_star();
    let radius = problem.radius();

    let mut x = x0.clone();
    let mut grad = DVector::zeros(problem.d());
    let mut y = Vec::with_capacity(epochs + 1);
    let mut dist_sq = Vec::with_capacity(epochs + 1);
    let mut iterates = record_iterates.then(|| {
        let mut v = Vec::with_capacity(n * epochs + 1);
        v.push(x0.as_slice().to_vec());
        v
    });
    let start_dist = (x0 - x_star).norm();
    let mut max_dist = start_dist;

    y.push(x0.as_slice().to_vec());
    dist_sq.push(start_dist * start_dist);

    let mut order = vec![0usize; n];
    for k in 1..=epochs {
        let mut rng = match sampling {
            Sampling::WithoutReplacement => {
                order = PermutationStream::permutation(n, seed, (k - 1) as u64);
                None
            }
            Sampling::WithReplacement => Some(epoch_rng(seed, WITH_REPLACEMENT_STREAM | (k - 1) as u64)),
        };
        for i in 1..=n {
            let index = match rng.as_mut() {
                None => order[i - 1],
                Some(rng) => rng.random_range(0..n),
            };
            let eta = schedule.step_unchecked(&consts, k, i)?;
            problem.gradient_into(index, &x, &mut grad);
            x.axpy(-eta, &grad, 1.0);

            let norm = x.norm();
            if !norm.is_finite() || norm > DIVERGENCE_NORM {
                return Err(Error::Diverged {
                    epoch: k,
                    iteration: i,
                    norm,
                });
            }
            max_dist = max_dist.max((&x - x_star).norm());
            if let Some(store) = iterates.as_mut() {
                store.push(x.as_slice().to_vec());
            }
        }
        let d = (&x - x_star).norm_squared();
        y.push(x.as_slice().to_vec());
        dist_sq.push(d);
    }

    Ok(RunResult {
        y,
        dist_sq,
        grad_evals: (n * epochs) as u64,
        exited_ball: max_dist > radius,
        max_dist,
        seed,
        iterates,
    })
}

/// Gap between one epoch's aggregate gradient and `n∇F(x_{k,0})`, with its
/// smoothness bound `L·Σᵢ‖x_{k,i−1} − x_{k,0}‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochDeviation {
    pub deviation: f64,
    pub bound: f64,
}

impl EpochDeviation {
    pub fn within_bound(&self) -> bool {
        self.deviation <= self.bound + 1e-9
    }
}

/// Simulate epoch `k` from `x_start` along `permutation` (zero-based indices).
/// `EpochLogConstant` is evaluated as if the run lasted `k` epochs.
pub fn epoch_gradient_deviation(
    problem: &FiniteSumProblem,
    x_start: &DVector<f64>,
    permutation: &[usize],
    schedule: &StepSchedule,
    k: usize,
) -> Result<EpochDeviation> {
    let n = problem.n();
    if permutation.len() != n {
        return Err(invalid("permutation", format!("expected length {n}")));
    }
    let mut seen = vec![false; n];
    for &p in permutation {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(invalid("permutation", "not a bijection on 0..n"));
        }
    }
    if k == 0 {
        return Err(invalid("k", "epochs are numbered from 1"));
    }
    let consts = ProblemConstants::of(problem).with_epochs(k);

    let mut x = x_start.clone();
    let mut grad = DVector::zeros(problem.d());
    let mut aggregate = DVector::zeros(problem.d());
    let mut drift = crate::numerics::NeumaierSum::new();
    for (i, &index) in permutation.iter().enumerate() {
        drift += (&x - x_start).norm();
        problem.gradient_into(index, &x, &mut grad);
        aggregate += &grad;
        let eta = schedule.step_unchecked(&consts, k, i + 1)?;
        x.axpy(-eta, &grad, 1.0);
    }
    let full = problem.full_gradient(x_start) * n as f64;
    let result = EpochDeviation {
        deviation: (aggregate - full).norm(),
        bound: problem.l() * drift.value(),
    };
    debug_assert!(result.within_bound(), "{result:?}");
    Ok(result)
}
