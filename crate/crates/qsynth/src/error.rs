use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("register name collision: {0}")]
    NameCollision(String),
    #[error("unknown register: {0}")]
    UnknownRegister(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("matrix is not an orthogonal projector (deviation {0:.3e})")]
    NotProjector(f64),
    #[error("register widths differ: {0} vs {1}")]
    WidthMismatch(usize, usize),
    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),
    #[error("layout mismatch")]
    LayoutMismatch,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("prover violated the register contract: {0}")]
    ProverContract(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("no search grid point qualifies: {0}")]
    NoQualifyingShift(String),
    #[error("unitary is not stable: {0}")]
    Unstable(String),
    #[error("zero evolution time: the unitary acts as the identity")]
    ZeroTime,
}

pub type Result<T> = std::result::Result<T, Error>;
