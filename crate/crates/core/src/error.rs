use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("{n_qubits} qubits exceeds the dense cap of {cap}")]
    ResourceCap { n_qubits: usize, cap: usize },

    /// The state's energy variance vanished before all roots were consumed;
    /// the step duration diverges there.
    #[error("eigenstate breakdown at step {step}: variance {variance:e} is below tolerance")]
    EigenstateBreakdown { step: usize, variance: f64 },

    #[error("sparse support of {entries} entries exceeds the cap of {cap}")]
    MemoryCap { entries: usize, cap: usize },

    #[error("polynomial annihilates the input state (norm {norm:e})")]
    OracleBreakdown { norm: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("approximation target not met: {0}")]
    Approximation(String),

    #[error("missing samples for {0}")]
    MissingSamples(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
