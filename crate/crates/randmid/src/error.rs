//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("chain diverged (non-finite state) at step {step}")]
    Divergence { step: u64 },

    #[error("covariance block is materially indefinite (pivot {pivot:.3e})")]
    Indefinite { pivot: f64 },

    #[error("validity window violated: {0}")]
    Window(String),

    #[error("no CLT in the infinite-gamma-hat regime: biased, no interval")]
    NoClt,

    #[error("quadrature oracle under-resolved: needs degree {needed}, rule covers {covered}")]
    UnderResolved { needed: usize, covered: usize },

    #[error("replicate on stream {stream} (seed {seed}) failed: {source}")]
    Replicate {
        seed: u64,
        stream: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("config error{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Config {
        line: Option<usize>,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
