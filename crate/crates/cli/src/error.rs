use std::fmt;

use cgraph::eval::EvalError;
use cgraph::io::IoError;
use cgraph::linkpred::LinkPredError;
use cgraph::pipeline::PipelineError;
use cgraph::recovery::RecoveryError;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Bad flags or configuration (exit 1).
    Config(String),
    /// Unreadable, malformed or misaligned input (exit 2).
    Data(String),
    /// The oracle or embedder could not answer (exit 3).
    Oracle(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Oracle(_) => 3,
        }
    }

    pub fn data(context: impl fmt::Display, err: impl fmt::Display) -> Self {
        CliError::Data(format!("{context}: {err}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Oracle(m) => write!(f, "oracle error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<RecoveryError> for CliError {
    fn from(e: RecoveryError) -> Self {
        match e {
            RecoveryError::Oracle { .. } => CliError::Oracle(e.to_string()),
            RecoveryError::MissingContext(..) | RecoveryError::MissingLabels => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Oracle(_) => CliError::Oracle(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<LinkPredError> for CliError {
    fn from(e: LinkPredError) -> Self {
        match e {
            LinkPredError::BadConfig(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::BadThreshold(_) => CliError::Config(e.to_string()),
            EvalError::EmbedderFailure(_) => CliError::Oracle(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Data(e.to_string())
    }
}
