use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("half-integer spin J = {0} is not supported; only integer J is implemented")]
    HalfIntegerSpin(f64),

    #[error("point (Q, P) = ({q}, {p}) lies at or beyond the stereographic chart boundary \
             (Q^2 + P^2 = {r2} >= 4 - {eps:e}); the south-pole limit is the Dicke state |J,+J>")]
    ChartBoundary { q: f64, p: f64, r2: f64, eps: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigensolver failed to converge for {model} at J = {j} (LAPACK info = {info})")]
    ConvergenceFailure { model: String, j: u32, info: i32 },

    #[error("input matrix is not unitary: max |F F^dagger - I| = {0:e}")]
    NonUnitaryInput(f64),

    #[error("matrix couples the two parity sectors (max off-block entry {0:e})")]
    ParityMixing(f64),

    #[error("{0} has no conserved energy")]
    NoConservedEnergy(String),

    #[error("probabilities are not normalized: sum = {0}")]
    NotNormalized(f64),

    #[error("degenerate step: consecutive points share N = {0}")]
    DegenerateStep(usize),

    #[error("window of {window} exceeds the {len} available values")]
    WindowTooLarge { window: usize, len: usize },

    #[error("too few points for a fit: {found} inside the window, need at least {needed}")]
    TooFewPoints { found: usize, needed: usize },

    #[error("too few levels for the spacing-ratio statistic: {0}, need at least 3")]
    TooFewLevels(usize),

    #[error("all {0} spacing ratios involve a zero spacing")]
    AllDegenerate(usize),

    #[error("series do not share the same N grid")]
    GridMismatch,

    #[error("cache entry at {path} is corrupt: {reason}")]
    CacheCorruption { path: PathBuf, reason: String },

    #[error("projected cost {projected:.3e} FLOP exceeds the budget of {budget:.3e} FLOP ({detail})")]
    OutOfBudget { projected: f64, budget: f64, detail: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
