use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the toolkit reports. Variants are grouped by the stage
/// that raises them; the CLI maps `is_validation()` errors to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    // ingestion
    #[error("missing file: {0}")]
    MissingFile(PathBuf),
    #[error("schema violation in {context}: {message}")]
    SchemaViolation { context: String, message: String },
    #[error("invariant violated ({invariant}) at {location}")]
    InvariantViolation { invariant: String, location: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    // numerics
    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("too few points: need at least {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("too few trials: need at least {needed}, got {got}")]
    TooFewTrials { needed: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("only one class present")]
    SingleClass,
    #[error("degenerate variance in {0}")]
    DegenerateVariance(&'static str),
    #[error("degenerate target: zero variance after standardization")]
    DegenerateTarget,
    #[error("training set is empty")]
    EmptyTraining,
    #[error("sample is empty")]
    EmptySample,
    #[error("eigendecomposition failed: {0}")]
    EigenFailure(String),
    #[error("requested {k} components but only {available} available")]
    KTooLarge { k: usize, available: usize },
    #[error("invalid selection size k = {0}")]
    KInvalid(usize),
    #[error("projection W'CW is singular")]
    SingularProjection,
    #[error("band {lo}-{hi} Hz is outside (0, {nyquist}) Hz")]
    BandOutOfRange { lo: f64, hi: f64, nyquist: f64 },
    #[error("segment length {segment} exceeds signal length {samples}")]
    SegmentTooLong { segment: usize, samples: usize },
    #[error("brute-force enumeration limited to {limit} points, got {got}")]
    TooLarge { limit: usize, got: usize },

    // evaluation
    #[error("session contains a single DBS condition")]
    SingleCondition,
    #[error("fold {fold} has an empty training set")]
    EmptyTrain { fold: usize },
    #[error("trial {trial} in block {block} carries no neural epoch")]
    MissingEpochs { block: usize, trial: usize },
    #[error("outcome combination (auc_sig={auc_sig}, r_sig={r_sig}, icc_high={icc_high}) is unreachable")]
    UnreachableCombination {
        auc_sig: bool,
        r_sig: bool,
        icc_high: bool,
    },
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("json error in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn schema(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::SchemaViolation {
            context: context.into(),
            message: message.into(),
        }
    }

    pub(crate) fn invariant(invariant: impl Into<String>, location: impl Into<String>) -> Self {
        Error::InvariantViolation {
            invariant: invariant.into(),
            location: location.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors caused by bad input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::MissingFile(_)
                | Error::SchemaViolation { .. }
                | Error::InvariantViolation { .. }
                | Error::InvalidSpec(_)
                | Error::Json { .. }
        )
    }
}
