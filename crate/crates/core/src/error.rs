use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("chain has no unique stationary distribution")]
    NonUniqueStationary,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("enumeration of {required} items exceeds the budget of {budget}")]
    TooLarge { required: u128, budget: u128 },
    #[error("emissions must be discrete and deterministic for this operation")]
    NotDeterministic,
    #[error("emissions must be discrete for this operation")]
    NotDiscrete,
    #[error("label {label} outside 1..={num_classes}")]
    BadLabel { label: usize, num_classes: usize },
    #[error("margin gamma must be positive, got {0}")]
    NonpositiveGamma(f64),
    #[error("confidence delta must lie in (0, 1), got {0}")]
    BadDelta(f64),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("expected a {expected} dataset, got {actual}")]
    WrongKind {
        expected: &'static str,
        actual: &'static str,
    },
    #[error("training loss became non-finite at epoch {epoch}")]
    DivergedLoss { epoch: usize },
    #[error("layer {layer} has zero spectral norm")]
    ZeroSpectralNorm { layer: usize },
    #[error("function value {value} outside [0, 1] (member {member}, point {point})")]
    OutOfRange {
        value: f64,
        member: usize,
        point: usize,
    },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
