//! Oracle transport: the [`Oracle`] trait, an HTTP chat-completions client,
//! an embeddings client and deterministic mocks for offline runs.

mod http;
mod mock;

use thiserror::Error;

pub use http::{ChatClient, HttpEmbedder, OracleConfig, Secret};
pub use mock::{pair_flips, MockOracle, PromptRecord, PromptReplayOracle};

/// Anything that turns a prompt into a completion.
///
/// Implementations must tolerate concurrent calls.
pub trait Oracle: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, OracleError>;
}

impl<F> Oracle for F
where
    F: Fn(&str) -> Result<String, OracleError> + Send + Sync,
{
    fn complete(&self, prompt: &str) -> Result<String, OracleError> {
        self(prompt)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("rate limited by the endpoint")]
    RateLimited,
    #[error("authentication rejected by the endpoint")]
    AuthFailure,
    #[error("endpoint returned HTTP {status}")]
    Status { status: u16 },
    #[error("malformed response: {0}")]
    InvalidResponse(String),
    #[error("prompt is not a rendered pairwise judgment prompt")]
    UnrecognizedPrompt,
    #[error("no fixture for {key}")]
    FixtureMiss { key: String },
}

impl OracleError {
    /// Failures worth retrying with backoff.
    pub fn is_transient(&self) -> bool {
        match self {
            OracleError::Transport(_) | OracleError::RateLimited => true,
            OracleError::Status { status } => *status >= 500,
            _ => false,
        }
    }
}
