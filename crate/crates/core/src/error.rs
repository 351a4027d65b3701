use thiserror::Error;

/// Errors raised by model construction, operator algebra, estimation and the learner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("policy incomplete at step {step}")]
    PolicyIncomplete { step: usize },

    #[error("step {step} out of range (valid: {min}..={max})")]
    StepOutOfRange { step: usize, min: usize, max: usize },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("unreachable history")]
    UnreachableHistory,

    #[error("rank deficient: smallest singular value {sigma_min:e} below floor {floor:e}")]
    RankDeficient { sigma_min: f64, floor: f64 },

    #[error("future sufficiency violated at step {step}: smallest singular value {sigma_min:e}")]
    FutureSufficiency { step: usize, sigma_min: f64 },

    #[error("sufficiency rejection failed after {tries} tries: step {step}, smallest singular value {sigma_min:e}")]
    SufficiencyRejection { tries: usize, step: usize, sigma_min: f64 },

    #[error("no window length k <= {k_max} is sufficient; per-k minimum singular values: {per_k:?}")]
    NoSufficientWindow { k_max: usize, per_k: Vec<f64> },

    #[error("past sufficiency undefined: zero state-visitation probability at step {step}")]
    PastSufficiencyUndefined { step: usize },

    #[error("past sufficiency violated at step {step}: smallest singular value {sigma_min:e}")]
    PastSufficiencyViolated { step: usize, sigma_min: f64 },

    #[error("enumeration too large: {count} exceeds cap {cap}")]
    EnumerationTooLarge { count: u128, cap: u128 },

    #[error("operator too large: {rows} rows exceeds cap {cap}")]
    OperatorTooLarge { rows: usize, cap: usize },

    #[error("no samples collected (t = 0)")]
    NoSamples,

    #[error("unknown beta preset '{0}'")]
    UnknownPreset(String),

    #[error("confidence set empty")]
    ConfidenceSetEmpty,

    #[error("iteration {t}: {source}")]
    Iteration {
        t: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by enumeration or size guards.
    pub fn is_guard(&self) -> bool {
        match self {
            Error::EnumerationTooLarge { .. } | Error::OperatorTooLarge { .. } => true,
            Error::Iteration { source, .. } => source.is_guard(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
