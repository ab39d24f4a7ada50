use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GosError {
    #[error("invalid survey config: {0}")]
    InvalidConfig(String),

    #[error("unknown opinion id `{0}`")]
    UnknownOpinion(String),

    #[error("unknown respondent id `{0}`")]
    UnknownRespondent(String),

    #[error("opinion `{0}` was selected but is not on the issued menu")]
    NotOnMenu(String),

    #[error("opinion `{0}` selected more than once")]
    DuplicateSelection(String),

    #[error("empty response: select at least one opinion or post a new one")]
    EmptyResponse,

    #[error("too many new opinions: {given} > {max}")]
    TooManyNewOpinions { given: usize, max: usize },

    #[error("posting new opinions is disabled for this survey")]
    NewOpinionsDisabled,

    #[error("malformed document: {0}")]
    Malformed(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("unknown annotator `{0}`")]
    UnknownAnnotator(String),

    #[error("invalid epsilon {epsilon}: must satisfy 0 < epsilon < 1/K = {bound}")]
    InvalidEpsilon { epsilon: f64, bound: f64 },

    #[error("partition label {label} out of range for label space {label_space}")]
    LabelOutOfRange { label: usize, label_space: usize },

    #[error("partition does not match graph: {0}")]
    PartitionMismatch(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("empty graph")]
    EmptyGraph,

    #[error("csv error: {0}")]
    Csv(String),
}

impl From<csv::Error> for GosError {
    fn from(e: csv::Error) -> Self {
        GosError::Csv(e.to_string())
    }
}

impl From<serde_json::Error> for GosError {
    fn from(e: serde_json::Error) -> Self {
        GosError::Malformed(e.to_string())
    }
}

pub type Result<T, E = GosError> = std::result::Result<T, E>;
