use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {0} is too small (need at least 2)")]
    DimensionTooSmall(usize),

    #[error("unknown qutrit level label `{0}` (expected g, e or f)")]
    UnknownLevel(String),

    #[error("Hilbert space mismatch: {left} vs {right}")]
    SpaceMismatch { left: String, right: String },

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid device parameters: {0}")]
    InvalidParams(String),

    #[error("unsupported Hamiltonian kind for this operation: {0}")]
    UnsupportedKind(String),

    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),

    #[error("numerical tolerance violated: {0}")]
    Tolerance(String),
}

pub type Result<T> = std::result::Result<T, Error>;
