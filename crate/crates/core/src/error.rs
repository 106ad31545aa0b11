use thiserror::Error;

/// Errors raised by the numeric and model layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QautError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("trace is {trace}, expected 1")]
    TraceNotOne { trace: f64 },

    #[error("zero vector cannot define a state")]
    ZeroVector,

    #[error("vector norm is {norm}, expected 1")]
    NotNormalized { norm: f64 },

    #[error("invalid ensemble weights: {0}")]
    BadWeights(String),

    #[error("unknown outcome label `{0}`")]
    UnknownOutcome(String),

    #[error("invalid outcome set: {0}")]
    InvalidOutcomes(String),

    #[error("completeness violated (max deviation {deviation:e})")]
    CompletenessViolated { deviation: f64 },

    #[error("matrix is not an isometry (max deviation of W*W from I is {deviation:e})")]
    NotIsometry { deviation: f64 },

    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("outcome `{outcome}` has probability {probability:e}, at or below the floor")]
    ZeroProbabilityOutcome { outcome: String, probability: f64 },

    #[error("probability {0} lies outside [0, 1] beyond tolerance")]
    ProbabilityOutOfRange(f64),

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("node `{0}` is terminal")]
    TerminalNode(String),

    #[error("unknown snapshot `{0}`")]
    UnknownSnapshot(String),

    #[error("max_steps must be positive")]
    ZeroSteps,

    #[error("residual mass {0:e} exceeds tolerance")]
    ResidualMass(f64),

    #[error("invalid model: {0}")]
    InvalidModel(String),
}

pub type Result<T> = std::result::Result<T, QautError>;
