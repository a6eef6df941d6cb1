//! Crate error type with stable, module-prefixed codes.

use thiserror::Error;

/// All failure modes surfaced by the toolkit.
///
/// Each variant maps to a stable `module.Name` code via [`Error::code`],
/// which the CLI emits in its machine-readable error output.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed event record: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("strict parse failed: {count} malformed line(s), first at line {first_line}: {first_reason}")]
    StrictParse {
        count: usize,
        first_line: usize,
        first_reason: String,
    },

    #[error("session has a single query; use the single-query extractor")]
    SingleQuerySession,

    #[error("session has multiple queries; use the multi-query extractor")]
    MultiQuerySession,

    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("feature slot {0} has no observed values; cannot impute")]
    AllMissingSlot(String),

    #[error("inconsistent annotation for goal {goal_id}: {reason}")]
    InconsistentAnnotation { goal_id: String, reason: String },

    #[error("only one class present; cannot rebalance")]
    SingleClass,

    #[error("split ratios must be non-negative and sum to 1 (got {0})")]
    BadSplitRatios(f64),

    #[error("vectors too short or zero variance; correlation undefined")]
    ZeroVariance,

    #[error("empty training data")]
    EmptyData,

    #[error("non-finite gradient at boosting round {round}: {detail}")]
    NonFiniteGradient { round: usize, detail: String },

    #[error("learner requires a binary problem, got {0} classes")]
    NotBinary(usize),

    #[error("class pair ({i}, {j}) has too few rows (min {min}, got {got})")]
    InsufficientPairData {
        i: usize,
        j: usize,
        min: usize,
        got: usize,
    },

    #[error("all hybrid weights are zero")]
    AllWeightsZero,

    #[error("label {0} missing from the validation set; macro-F1 undefined")]
    MissingLabel(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("model artifact not found at {0}")]
    ModelNotFound(String),

    #[error("unsupported artifact format_version {found} (supported: {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable code, prefixed with the owning module.
    pub fn code(&self) -> &'static str {
        match self {
            Error::MalformedRecord { .. } => "session.MalformedRecord",
            Error::StrictParse { .. } => "session.StrictParse",
            Error::SingleQuerySession => "features.SingleQuerySession",
            Error::MultiQuerySession => "features.MultiQuerySession",
            Error::OutOfRange { .. } => "preprocess.OutOfRange",
            Error::AllMissingSlot(_) => "preprocess.AllMissingSlot",
            Error::InconsistentAnnotation { .. } => "preprocess.InconsistentAnnotation",
            Error::SingleClass => "preprocess.SingleClass",
            Error::BadSplitRatios(_) => "preprocess.BadSplitRatios",
            Error::ZeroVariance => "stats.ZeroVariance",
            Error::EmptyData => "learners.EmptyData",
            Error::NonFiniteGradient { .. } => "learners.NonFiniteGradient",
            Error::NotBinary(_) => "learners.NotBinary",
            Error::InsufficientPairData { .. } => "combine.InsufficientPairData",
            Error::AllWeightsZero => "hybrid.AllWeightsZero",
            Error::MissingLabel(_) => "hybrid.MissingLabel",
            Error::InvalidConfig(_) => "config.Invalid",
            Error::ModelNotFound(_) => "model.NotFound",
            Error::UnsupportedVersion { .. } => "model.UnsupportedVersion",
            Error::Io(_) => "io.Error",
            Error::Json(_) => "io.Json",
            Error::Csv(_) => "io.Csv",
        }
    }
}
