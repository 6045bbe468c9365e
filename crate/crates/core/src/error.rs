use thiserror::Error;

#[derive(Debug, Error)]
pub enum QolError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value at feature {feature}")]
    NonFinite { feature: usize },

    #[error("normalizer is still warming up ({seen} of {needed} samples)")]
    NotReady { seen: usize, needed: usize },

    #[error("normalizer is already initialized")]
    AlreadyReady,

    #[error("sketch weights sum to zero or are corrupt")]
    ZeroWeight,

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("training step produced non-finite parameters")]
    NonFiniteUpdate,

    #[error("empty stream")]
    EmptyStream,

    #[error("no samples were evaluated")]
    NothingEvaluated,

    #[error("confusion matrix has no true counts")]
    EmptyConfusion,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, QolError>;
