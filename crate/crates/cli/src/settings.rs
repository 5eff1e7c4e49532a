use std::path::Path;

use cgraph::linkpred::TrainConfig;
use cgraph::llm::{OracleConfig, Secret};
use cgraph::pipeline::PipelineConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_DOMAIN: &str = "natural language processing";

/// Contents of the `--config` TOML file. Every key is optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub domain: Option<String>,
    /// Concurrent oracle calls during recovery.
    pub in_flight: Option<usize>,
    /// Cap on additional prompt context, in characters.
    pub max_info_chars: Option<usize>,
    /// Minimum words for a corpus line to count as a document.
    pub min_words: Option<usize>,
    /// Chat endpoint for judgments and answers.
    pub oracle: Option<OracleConfig>,
    /// Chat endpoint for command generation; defaults to `oracle`.
    pub command_oracle: Option<OracleConfig>,
    pub embedder: Option<OracleConfig>,
    pub train: TrainConfig,
    pub pipeline: PipelineConfig,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Endpoint settings with the secret taken from the environment.
pub fn live_endpoint(config: Option<&OracleConfig>, section: &str) -> Result<OracleConfig, CliError> {
    let mut config = config
        .cloned()
        .ok_or_else(|| CliError::Config(format!("a live endpoint needs a [{section}] section in --config")))?;
    config
        .validate()
        .map_err(|e| CliError::Config(format!("[{section}]: {e}")))?;
    if config.api_key.is_none() {
        config.api_key = Secret::from_env();
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_sections_keep_defaults() {
        let s: Settings = toml::from_str(
            "domain = \"biology\"\n[train]\nepochs = 7\n[train.shape]\nlayers = [4]\n[oracle]\nendpoint = \"http://x\"\nmodel = \"m\"\n",
        )
        .unwrap();
        assert_eq!(s.domain.as_deref(), Some("biology"));
        assert_eq!(s.train.epochs, 7);
        assert_eq!(s.train.learning_rate, TrainConfig::default().learning_rate);
        assert_eq!(s.train.shape.layers, vec![4]);
        assert_eq!(s.oracle.unwrap().max_retries, 3);
        assert!(toml::from_str::<Settings>("bogus = 1").is_err());
    }
}
