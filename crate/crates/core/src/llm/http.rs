use std::fmt;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tracing::{debug, warn};
use ureq::Agent;

use super::{Oracle, OracleError};
use crate::eval::{EmbedError, Embedder};

/// API key wrapper that never prints its contents.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct Secret(String);

impl Secret {
    pub fn new(value: impl Into<String>) -> Self {
        Self(value.into())
    }

    /// Reads `LLM_API_KEY`, if set and non-empty.
    pub fn from_env() -> Option<Self> {
        std::env::var("LLM_API_KEY").ok().filter(|k| !k.is_empty()).map(Self)
    }

    pub fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Secret(***)")
    }
}

fn default_temperature() -> f64 {
    0.0
}
fn default_timeout() -> u64 {
    60
}
fn default_retries() -> u32 {
    3
}
fn default_backoff() -> u64 {
    500
}

/// Connection settings for a chat-completions (or embeddings) endpoint.
///
/// The API key is never part of the serialized form; it comes from
/// `LLM_API_KEY` or is set programmatically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleConfig {
    pub endpoint: String,
    pub model: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// Base delay of the exponential backoff, doubled per retry.
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
    #[serde(skip)]
    pub api_key: Option<Secret>,
}

impl OracleConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            temperature: default_temperature(),
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            backoff_ms: default_backoff(),
            api_key: None,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(format!("temperature must be >= 0, got {}", self.temperature));
        }
        if self.endpoint.is_empty() {
            return Err("endpoint must not be empty".into());
        }
        Ok(())
    }
}

struct JsonPoster {
    agent: Agent,
    config: OracleConfig,
}

impl JsonPoster {
    fn new(config: OracleConfig) -> Self {
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Self { agent, config }
    }

    fn post_once(&self, body: &Value) -> Result<Value, OracleError> {
        let mut req = self.agent.post(&self.config.endpoint);
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", &format!("Bearer {}", key.expose()));
        }
        let mut resp = req.send_json(body).map_err(|e| OracleError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        match status {
            200..=299 => resp
                .body_mut()
                .read_json::<Value>()
                .map_err(|e| OracleError::InvalidResponse(e.to_string())),
            429 => Err(OracleError::RateLimited),
            401 | 403 => Err(OracleError::AuthFailure),
            _ => Err(OracleError::Status { status }),
        }
    }

    fn post(&self, body: &Value) -> Result<Value, OracleError> {
        let mut attempt = 0;
        loop {
            match self.post_once(body) {
                Err(e) if e.is_transient() && attempt < self.config.max_retries => {
                    let delay = self.config.backoff_ms.saturating_mul(1 << attempt.min(16));
                    warn!(attempt, delay_ms = delay, error = %e, "retrying request");
                    thread::sleep(Duration::from_millis(delay));
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

/// Blocking client for the chat-completions JSON schema
/// (`messages` in, `choices[0].message.content` out).
pub struct ChatClient {
    poster: JsonPoster,
}

impl ChatClient {
    pub fn new(config: OracleConfig) -> Self {
        Self {
            poster: JsonPoster::new(config),
        }
    }
}

impl Oracle for ChatClient {
    fn complete(&self, prompt: &str) -> Result<String, OracleError> {
        let cfg = &self.poster.config;
        let body = json!({
            "model": cfg.model,
            "temperature": cfg.temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        debug!(model = %cfg.model, chars = prompt.len(), "chat completion");
        let value = self.poster.post(&body)?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| OracleError::InvalidResponse("missing choices[0].message.content".into()))
    }
}

/// Embeddings endpoint client (`input` in, `data[0].embedding` out).
pub struct HttpEmbedder {
    poster: JsonPoster,
}

impl HttpEmbedder {
    pub fn new(config: OracleConfig) -> Self {
        Self {
            poster: JsonPoster::new(config),
        }
    }
}

impl Embedder for HttpEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        let body = json!({"model": self.poster.config.model, "input": text});
        let value = self.poster.post(&body).map_err(|e| EmbedError(e.to_string()))?;
        value["data"][0]["embedding"]
            .as_array()
            .and_then(|xs| xs.iter().map(Value::as_f64).collect::<Option<Vec<_>>>())
            .ok_or_else(|| EmbedError("missing data[0].embedding".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn secret_is_redacted() {
        let mut cfg = OracleConfig::new("http://x", "m");
        cfg.api_key = Some(Secret::new("sk-very-secret"));
        let dbg = format!("{cfg:?}");
        assert!(!dbg.contains("very-secret"));
        assert!(!serde_json::to_string(&cfg).unwrap().contains("very-secret"));
    }

    #[test]
    fn negative_temperature_rejected() {
        let mut cfg = OracleConfig::new("http://x", "m");
        cfg.temperature = -0.1;
        assert!(cfg.validate().is_err());
    }
}
