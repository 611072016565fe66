use thiserror::Error;

/// Errors produced by the wignerlab library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (relative deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("invalid representation: {0}")]
    InvalidRep(String),

    #[error("bad group element: {0}")]
    BadElement(String),

    #[error("averaging method {method} is not supported for group kind {kind}")]
    MethodUnsupported { method: String, kind: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("vectors are not orthonormal (deviation {deviation:.3e})")]
    NotOrthonormal { deviation: f64 },

    #[error("eigenvalue {value:.3e} lies outside [0, 1] beyond tolerance")]
    SpectrumOutOfRange { value: f64 },

    #[error("positivity repair of magnitude {magnitude:.3e} exceeds the allowed bound")]
    RepairTooLarge { magnitude: f64 },

    #[error("product closure did not stabilise after {rounds} rounds")]
    NonConvergent { rounds: usize },

    #[error("ambient dimension {ambient} exceeds cap {cap}")]
    ResourceLimit { ambient: usize, cap: usize },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("unknown base point {0:?}")]
    UnknownBasePoint(String),

    #[error("fibre {label:?}: {source}")]
    Fibre {
        label: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
