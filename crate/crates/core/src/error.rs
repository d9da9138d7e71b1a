use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("weights must lie on the simplex (sum = {sum})")]
    InvalidWeights { sum: f64 },
    #[error("operation not supported for {kind} distributions: {what}")]
    UnsupportedKind { kind: &'static str, what: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular transform: derivative vanishes at {at}")]
    SingularTransform { at: f64 },
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("estimator used before fit")]
    NotFitted,
    #[error("sample point {value} lies outside every bin")]
    OutOfRange { value: f64 },
    #[error("all tuning candidates produced an infinite loss")]
    TuningFailed,
    #[error("fold {fold} has {size} test points; at least 2 are required")]
    FoldTooSmall { fold: usize, size: usize },
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("boosting weights collapsed to zero in round {round}")]
    WeightCollapse { round: usize },
    #[error("class {class} is absent from the training split")]
    Stratification { class: i64 },
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
