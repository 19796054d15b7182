//! Step-size rules `η_{k,i}` for epoch `k ≥ 1`, iteration `i ∈ [1, n]`.
//!
//! The decaying rules share the offset `k₀ = α·κ`, which keeps every step at or
//! below `2/L`. `k₀` is kept real-valued; it only ever appears in denominators.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Result};
use crate::problems::FiniteSumProblem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepSchedule {
    /// `η ≡ eta`.
    Constant { eta: f64 },
    /// `η ≡ 2α·log(nK)/(μnK)`; needs the epoch budget `K` up front.
    EpochLogConstant { alpha: f64 },
    /// `η_{k,i} = (2α/μ)/(k₀ + n(k−1) + i)`.
    PerIteration { alpha: f64 },
    /// `η_{k,i} = (2α/μ)/(k₀ + nk)` for every epoch.
    EpochOnlyDecay { alpha: f64 },
    /// `(2α/μ)/(k₀ + i)` inside epoch 1, then `(2α/μ)/(k₀ + nk)` for `k ≥ 2`.
    TwoPhase { alpha: f64 },
}

/// Problem-level quantities a schedule needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemConstants {
    pub mu: f64,
    pub l: f64,
    pub kappa: f64,
    pub n: usize,
    pub k_total: Option<usize>,
}

impl ProblemConstants {
    pub fn new(mu: f64, l: f64, n: usize) -> Result<Self> {
        ensure_finite(mu, "mu")?;
        ensure_finite(l, "L")?;
        if !(mu > 0.0) || l < mu {
            return Err(invalid("L", format!("need L >= mu > 0 (mu = {mu}, L = {l})")));
        }
        if n == 0 {
            return Err(invalid("n", "must be at least 1"));
        }
        Ok(Self {
            mu,
            l,
            kappa: l / mu,
            n,
            k_total: None,
        })
    }

    pub fn of(problem: &FiniteSumProblem) -> Self {
        Self {
            mu: problem.mu(),
            l: problem.l(),
            kappa: problem.kappa(),
            n: problem.n(),
            k_total: None,
        }
    }

    pub fn with_epochs(mut self, k_total: usize) -> Self {
        self.k_total = Some(k_total);
        self
    }
}

impl StepSchedule {
    pub fn constant(eta: f64) -> Result<Self> {
        let s = StepSchedule::Constant { eta };
        s.validate().map(|_| s)
    }

    pub fn epoch_log_constant(alpha: f64) -> Result<Self> {
        let s = StepSchedule::EpochLogConstant { alpha };
        s.validate().map(|_| s)
    }

    pub fn per_iteration(alpha: f64) -> Result<Self> {
        let s = StepSchedule::PerIteration { alpha };
        s.validate().map(|_| s)
    }

    pub fn epoch_only_decay(alpha: f64) -> Result<Self> {
        let s = StepSchedule::EpochOnlyDecay { alpha };
        s.validate().map(|_| s)
    }

    pub fn two_phase(alpha: f64) -> Result<Self> {
        let s = StepSchedule::TwoPhase { alpha };
        s.validate().map(|_| s)
    }

    pub fn name(&self) -> &'static str {
        match self {
            StepSchedule::Constant { .. } => "constant",
            StepSchedule::EpochLogConstant { .. } => "epoch_log_constant",
            StepSchedule::PerIteration { .. } => "per_iteration",
            StepSchedule::EpochOnlyDecay { .. } => "epoch_only_decay",
            StepSchedule::TwoPhase { .. } => "two_phase",
        }
    }

    /// `alpha` for the decaying rules, `eta` for `Constant`.
    pub fn parameter(&self) -> f64 {
        match *self {
            StepSchedule::Constant { eta } => eta,
            StepSchedule::EpochLogConstant { alpha }
            | StepSchedule::PerIteration { alpha }
            | StepSchedule::EpochOnlyDecay { alpha }
            | StepSchedule::TwoPhase { alpha } => alpha,
        }
    }

    /// Checks the α ranges each rule's convergence guarantee needs.
    pub fn validate(&self) -> Result<()> {
        let (alpha, floor, source) = match *self {
            StepSchedule::Constant { eta } => {
                if !eta.is_finite() || eta < 0.0 {
                    return Err(invalid("eta", format!("must be finite and >= 0, got {eta}")));
                }
                return Ok(());
            }
            StepSchedule::EpochLogConstant { alpha } => (alpha, 3.0, "the log-constant step needs alpha > 3"),
            StepSchedule::PerIteration { alpha } => (alpha, 1.0, "the per-iteration rate needs alpha > 1"),
            StepSchedule::EpochOnlyDecay { alpha } => (alpha, 2.0, "per-epoch decay needs alpha > 2"),
            StepSchedule::TwoPhase { alpha } => (alpha, 2.0, "the two-phase rate needs alpha > 2"),
        };
        if !alpha.is_finite() || alpha <= floor {
            return Err(invalid("alpha", format!("{source} (got {alpha})")));
        }
        Ok(())
    }

    /// `k₀ = α·κ` for the decaying rules.
    pub fn k0(&self, consts: &ProblemConstants) -> Option<f64> {
        match *self {
            StepSchedule::PerIteration { alpha }
            | StepSchedule::EpochOnlyDecay { alpha }
            | StepSchedule::TwoPhase { alpha } => Some(alpha * consts.kappa),
            _ => None,
        }
    }

    /// `η_{k,i}` with one-based `k` and `i`.
    pub fn step_size(&self, consts: &ProblemConstants, k: usize, i: usize) -> Result<f64> {
        ensure_finite(consts.mu, "mu")?;
        ensure_finite(consts.kappa, "kappa")?;
        if k < 1 {
            return Err(invalid("k", "epochs are numbered from 1"));
        }
        if i < 1 || i > consts.n {
            return Err(invalid("i", format!("iteration {i} outside [1, {}]", consts.n)));
        }
        self.step_unchecked(consts, k, i)
    }

    pub(crate) fn step_unchecked(&self, consts: &ProblemConstants, k: usize, i: usize) -> Result<f64> {
        let n = consts.n as f64;
        let (k, i) = (k as f64, i as f64);
        let scale = |alpha: f64| 2.0 * alpha / consts.mu;
        Ok(match *self {
            StepSchedule::Constant { eta } => eta,
            StepSchedule::EpochLogConstant { alpha } => {
                let total = consts
                    .k_total
                    .filter(|&k| k >= 1)
                    .ok_or_else(|| invalid("K", "the log-constant step needs the epoch budget K up front"))?;
                let nk = n * total as f64;
                alpha * 2.0 * nk.ln() / (consts.mu * nk)
            }
            StepSchedule::PerIteration { alpha } => scale(alpha) / (alpha * consts.kappa + n * (k - 1.0) + i),
            StepSchedule::EpochOnlyDecay { alpha } => scale(alpha) / (alpha * consts.kappa + n * k),
            StepSchedule::TwoPhase { alpha } => {
                let k0 = alpha * consts.kappa;
                if k == 1.0 {
                    scale(alpha) / (k0 + i)
                } else {
                    scale(alpha) / (k0 + n * k)
                }
            }
        })
    }

    /// Largest step over `k ∈ [1, K]`, `i ∈ [1, n]`. Every rule is non-increasing
    /// along the run, so this is the very first step.
    pub fn max_step(&self, consts: &ProblemConstants, epochs: usize) -> Result<f64> {
        let consts = ProblemConstants {
            k_total: consts.k_total.or(Some(epochs)),
            ..*consts
        };
        self.step_unchecked(&consts, 1, 1)
    }
}

impl std::fmt::Display for StepSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StepSchedule::Constant { eta } => write!(f, "constant(eta={eta})"),
            other => write!(f, "{}(alpha={})", other.name(), other.parameter()),
        }
    }
}
