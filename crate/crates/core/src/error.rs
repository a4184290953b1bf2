use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("points {first} and {second} coincide")]
    Coincidence { first: usize, second: usize },

    #[error("size mismatch: expected {expected}, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("N = {n} exceeds the permutation enumeration limit {max}")]
    TooManyParticles { n: usize, max: usize },

    #[error("not a permutation: {0:?}")]
    NotBijective(Vec<usize>),

    #[error("invalid species table: {0}")]
    InvalidSpecies(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("coordinate {coordinate} = {value} lies outside the grid box [0, {length})")]
    OutOfBox {
        coordinate: usize,
        value: f64,
        length: f64,
    },

    #[error("time step must be non-negative, got {0}")]
    NegativeStep(f64),

    #[error("unstable step: norm drift {drift:e}")]
    UnstableStep { drift: f64 },

    #[error("density {density:e} at or below node threshold {threshold:e}")]
    Node { density: f64, threshold: f64 },

    #[error("point set of the configuration does not match the fiber base")]
    PointSetMismatch,

    #[error("internal dimensions differ between permuted particles")]
    UnequalInternalDims,

    #[error("path step {step} too coarse for continuous point matching")]
    PathTooCoarse { step: usize },

    #[error("path does not start at the fiber base")]
    PathStartMismatch,

    #[error("fiber element violates the subbundle constraint (residual {residual:e})")]
    NotInSubbundle { residual: f64 },

    #[error("operation requires the grid backend")]
    GridRequired,

    #[error("operation requires the analytic Gaussian backend")]
    AnalyticRequired,

    #[error("insufficient samples: {got} < {min}")]
    InsufficientSamples { got: usize, min: usize },

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
