use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count {n} out of supported range {min}..={max}")]
    QubitCountOutOfRange { n: usize, min: usize, max: usize },

    #[error("gate target {target} out of range for {n} qubits")]
    TargetOutOfRange { target: usize, n: usize },

    #[error("gate targets must be distinct (got {0})")]
    DuplicateTargets(usize),

    #[error("unbound circuit parameter `{0}`")]
    UnboundParameter(String),

    #[error("angle is not finite")]
    NonFiniteAngle,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid quantum numbers: twice_j={twice_j}, twice_m1={twice_m1}, twice_m2={twice_m2}")]
    InvalidQuantumNumbers {
        twice_j: i64,
        twice_m1: i64,
        twice_m2: i64,
    },

    #[error("spin sector {twice_j}/2 missing from block map")]
    MissingSector { twice_j: i64 },

    #[error("matrix is not unitary within tolerance {tol}")]
    NotUnitary { tol: f64 },

    #[error("instance too large: {0}")]
    InstanceTooLarge(String),

    #[error("graph generation failed: {0}")]
    GraphGeneration(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
