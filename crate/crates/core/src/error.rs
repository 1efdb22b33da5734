use std::fmt;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, field `{field}`: {message}")]
    Parse {
        line: usize,
        field: &'static str,
        message: String,
    },
    #[error("invalid case: {0}")]
    Validation(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("graph is disconnected; {0} undefined")]
    Disconnected(&'static str),
    #[error("no samples produced ({} scenarios reported diagnostics)", .0.len())]
    NoSamples(Vec<ScenarioDiagnostic>),
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("architecture mismatch: {0}")]
    Architecture(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    /// True for failures caused by the numbers rather than by the inputs'
    /// structure (divergence, singular systems, NaN).
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numeric(_) | Error::NoSamples(_))
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Json(_) | Error::Schema(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// One record per scenario that did not yield a sample.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScenarioDiagnostic {
    pub scenario: usize,
    pub hour: Option<usize>,
    pub contingency: Vec<usize>,
    pub reason: String,
}

impl fmt::Display for ScenarioDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "scenario={} hour={:?} outage={:?} reason={}",
            self.scenario, self.hour, self.contingency, self.reason
        )
    }
}
