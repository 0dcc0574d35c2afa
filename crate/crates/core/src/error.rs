use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

/// Whether a failure came from malformed input or from a violated
/// mathematical precondition. The CLI maps these to distinct exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Precondition,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("point at distance {distance} from the center lies outside the domain ball of radius {radius}")]
    DomainViolation { distance: f64, radius: f64 },

    #[error("invalid mapping: {0}")]
    InvalidMapping(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),

    #[error("unsupported scheme {0} for this operation")]
    UnsupportedScheme(String),

    #[error("precondition {condition} violated{}: {detail}", index.map(|k| format!(" at index {k}")).unwrap_or_default())]
    Precondition { condition: String, index: Option<usize>, detail: String },

    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    #[error("malformed json: {0}")]
    Json(String),
}

impl LabError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            LabError::Precondition { .. } => ErrorKind::Precondition,
            _ => ErrorKind::Config,
        }
    }

    pub(crate) fn precondition(condition: impl Into<String>, index: Option<usize>, detail: impl Into<String>) -> Self {
        LabError::Precondition { condition: condition.into(), index, detail: detail.into() }
    }
}

impl From<serde_json::Error> for LabError {
    fn from(err: serde_json::Error) -> Self {
        LabError::Json(err.to_string())
    }
}
