use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("illegal Pauli symbol {0:?}")]
    BadSymbol(char),

    #[error("index {index} out of range for {len} qubits")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("duplicate index {0}")]
    DuplicateIndex(usize),

    #[error("size guard: {what} ({size} exceeds limit {limit})")]
    SizeGuard {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("operator has a nonzero syndrome")]
    NonzeroSyndrome,

    #[error("neither side is distinguishable on the contracted legs")]
    NotDistinguishable,

    #[error("inconsistent leg pairing: {0}")]
    BadPairing(String),

    #[error("invalid code: {0}")]
    InvalidCode(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("optimizer did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
