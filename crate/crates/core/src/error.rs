use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("component index {index} out of range (n = {n})")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("optimum solve stalled: gradient norm {residual:e} above tolerance {tol:e} after {iterations} iterations")]
    SolveFailed {
        residual: f64,
        tol: f64,
        iterations: usize,
    },

    #[error("largest step {max_step:e} exceeds the 2/L safety limit {limit:e}")]
    StepTooLarge { max_step: f64, limit: f64 },

    #[error("iterate diverged at epoch {epoch}, iteration {iteration} (norm {norm:e})")]
    Diverged {
        epoch: usize,
        iteration: usize,
        norm: f64,
    },

    #[error("trial {trial} (seed {seed}) failed: {source}")]
    TrialFailed {
        trial: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("operation requires a quadratic problem")]
    NotQuadratic,

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("{0}")]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    Csv(#[from] csv::Error),

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn ensure_finite(value: f64, what: &'static str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
