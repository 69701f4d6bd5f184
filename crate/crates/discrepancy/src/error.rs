use thiserror::Error;

/// Errors shared across the toolkit.
///
/// Algorithmic failures that carry partial progress (`RetriesExhausted`,
/// `FullColoringFailed`) keep their best attempt so callers can inspect or
/// report it instead of losing the work.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("shape mismatch: {0}")]
    ShapeError(String),

    #[error("invalid configuration: {0}")]
    ConfigError(String),

    #[error("parse error at {context}: {message}")]
    ParseError { context: String, message: String },

    #[error("degenerate family: {0}")]
    DegenerateFamily(String),

    #[error("retries exhausted after {retries} attempts (best integral fraction {best_fraction:.4})")]
    RetriesExhausted {
        retries: usize,
        best_fraction: f64,
        best: Box<crate::coloring::Coloring>,
    },

    #[error("full coloring failed in round {round}: {source}")]
    FullColoringFailed {
        round: usize,
        partial: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("matrix {index} has trace {trace:.3e}; traceless input required (pass recentre to shift)")]
    TraceError { index: usize, trace: f64 },

    #[error("degenerate state: {0}")]
    DegenerateState(String),

    #[error("infeasible input: {0}")]
    InfeasibleInput(String),

    #[error("measurement bias out of range: spectral norm {0} exceeds 1")]
    BiasError(f64),

    #[error("message space too large: {0}")]
    SizeError(String),

    #[error("invalid witness: {0}")]
    WitnessError(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
