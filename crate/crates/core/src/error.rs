use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: weights have length {weights}, features have dimension {features}")]
    DimensionMismatch { weights: usize, features: usize },

    #[error("label {label} out of range for {count} labels")]
    LabelOutOfRange { label: usize, count: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("alpha {0} outside [0, 1]")]
    InvalidAlpha(f64),

    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("no competitor exists: the label space has a single sequence")]
    NoCompetitor,

    #[error("non-finite objective at iteration {iteration}")]
    NonFiniteObjective { iteration: usize, point: Vec<f64> },

    #[error("simplex oracle supports at most {max} labels, got {got}; use a sampling-based check instead")]
    TooManyLabels { got: usize, max: usize },

    #[error("bound undefined at alpha=1")]
    BoundUndefinedAtAlphaOne,

    #[error("malformed tag {tag:?} in sentence {sentence}, position {position}")]
    MalformedTag {
        sentence: usize,
        position: usize,
        tag: String,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported version: {0}")]
    UnsupportedVersion(String),

    #[error("fingerprint mismatch: stored {stored}, computed {computed}")]
    FingerprintMismatch { stored: String, computed: String },

    #[error("test split accessed before model selection finished")]
    TestAccessedEarly,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
