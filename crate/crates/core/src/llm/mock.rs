//! Deterministic oracles for offline runs and tests.

use std::collections::HashMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Oracle, OracleError};
use crate::graph::ConceptGraph;
use crate::io::{read_jsonl, IoError};
use crate::recovery::{detect_variant, extract_pair, JudgmentRecord, VariantKind};
use crate::text::normalize_name;

/// Uniform draw in [0, 1) that depends only on `(seed, a, b)`.
fn pair_uniform(seed: u64, a: &str, b: &str) -> f64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(normalize_name(a).as_bytes());
    h.update([0x1f]);
    h.update(normalize_name(b).as_bytes());
    let digest = h.finalize();
    let word = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
    (word >> 11) as f64 / (1u64 << 53) as f64
}

/// Whether the graph-backed mock flips its verdict on `(a, b)`.
pub fn pair_flips(seed: u64, flip_probability: f64, a: &str, b: &str) -> bool {
    pair_uniform(seed, a, b) < flip_probability
}

#[derive(Debug, Clone)]
pub enum MockOracle {
    /// Answers `YES` iff the hidden graph has edge (A, B), with a
    /// per-pair deterministic flip.
    GraphBacked {
        hidden: ConceptGraph,
        flip_probability: f64,
        seed: u64,
    },
    /// Replays recorded responses keyed by (A, B, variant).
    Scripted {
        fixtures: HashMap<(String, String, VariantKind), String>,
    },
    /// Returns the prompt's last line.
    Echo,
}

impl MockOracle {
    pub fn graph_backed(hidden: ConceptGraph, flip_probability: f64, seed: u64) -> Result<Self, String> {
        if !(0.0..1.0).contains(&flip_probability) {
            return Err(format!("flip probability must be in [0, 1), got {flip_probability}"));
        }
        Ok(MockOracle::GraphBacked {
            hidden,
            flip_probability,
            seed,
        })
    }

    /// Later records for the same key replace earlier ones.
    pub fn scripted(records: impl IntoIterator<Item = JudgmentRecord>) -> Self {
        let fixtures = records
            .into_iter()
            .map(|r| ((normalize_name(&r.a), normalize_name(&r.b), r.variant), r.raw))
            .collect();
        MockOracle::Scripted { fixtures }
    }

    pub fn scripted_from_jsonl<R: BufRead>(reader: R) -> Result<Self, IoError> {
        Ok(Self::scripted(read_jsonl::<JudgmentRecord, _>(reader)?))
    }
}

impl Oracle for MockOracle {
    fn complete(&self, prompt: &str) -> Result<String, OracleError> {
        match self {
            MockOracle::GraphBacked {
                hidden,
                flip_probability,
                seed,
            } => {
                let (a, b) = extract_pair(prompt).ok_or(OracleError::UnrecognizedPrompt)?;
                let truth = match (hidden.id_of(&a), hidden.id_of(&b)) {
                    (Some(x), Some(y)) => hidden.has_edge(x, y),
                    _ => false,
                };
                let answer = truth ^ pair_flips(*seed, *flip_probability, &a, &b);
                Ok(if answer { "YES" } else { "NO" }.to_string())
            }
            MockOracle::Scripted { fixtures } => {
                let (a, b) = extract_pair(prompt).ok_or(OracleError::UnrecognizedPrompt)?;
                let variant = detect_variant(prompt).ok_or(OracleError::UnrecognizedPrompt)?;
                fixtures
                    .get(&(normalize_name(&a), normalize_name(&b), variant))
                    .cloned()
                    .ok_or_else(|| OracleError::FixtureMiss {
                        key: format!("({a:?}, {b:?}, {variant})"),
                    })
            }
            MockOracle::Echo => Ok(prompt.lines().last().unwrap_or_default().to_string()),
        }
    }
}

/// One recorded prompt/response exchange.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub prompt: String,
    pub response: String,
}

/// Replays responses by exact prompt text.
#[derive(Debug, Clone, Default)]
pub struct PromptReplayOracle {
    responses: HashMap<String, String>,
}

impl PromptReplayOracle {
    pub fn new(records: impl IntoIterator<Item = PromptRecord>) -> Self {
        Self {
            responses: records.into_iter().map(|r| (r.prompt, r.response)).collect(),
        }
    }

    pub fn from_jsonl<R: BufRead>(reader: R) -> Result<Self, IoError> {
        Ok(Self::new(read_jsonl::<PromptRecord, _>(reader)?))
    }
}

impl Oracle for PromptReplayOracle {
    fn complete(&self, prompt: &str) -> Result<String, OracleError> {
        self.responses
            .get(prompt)
            .cloned()
            .ok_or_else(|| OracleError::FixtureMiss {
                key: format!("prompt of {} chars", prompt.len()),
            })
    }
}
