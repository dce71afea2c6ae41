use thiserror::Error;

/// Errors raised by the reservoir engine.
#[derive(Debug, Error)]
pub enum QnirError {
    #[error("qubit index {qubit} out of range for a {qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, qubits: usize },

    #[error("register of {requested} qubits exceeds the full-register cap of {max}")]
    TooManyQubits { requested: usize, max: usize },

    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("operator set is not trace preserving (max deviation {deviation:e})")]
    NotTracePreserving { deviation: f64 },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate metric: {0}")]
    DegenerateMetric(&'static str),

    #[error("series generation diverged at step {step} (value {value:e})")]
    Divergence { step: usize, value: f64 },

    #[error("no finite cost found within the evaluation budget")]
    NoFiniteCost,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = QnirError> = std::result::Result<T, E>;
