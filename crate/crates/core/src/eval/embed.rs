use std::collections::HashMap;
use std::io::BufRead;
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::io::{read_jsonl, IoError};
use crate::text::normalize_name;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{0}")]
pub struct EmbedError(pub String);

/// Maps text to a vector. Must be deterministic per text and safe to call
/// from several threads.
pub trait Embedder: Send + Sync {
    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError>;
}

/// Cosine similarity; vectors of different length are zero-padded and a
/// zero vector has similarity 0 with everything.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

fn seed_of(seed: u64, text: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(text.as_bytes());
    u64::from_le_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
}

/// Cosine 1 for normalized-equal strings and 0 otherwise.
///
/// Each distinct normalized string is interned to its own basis vector.
#[derive(Debug, Default)]
pub struct ExactMatchEmbedder {
    interned: Mutex<HashMap<String, usize>>,
}

impl Embedder for ExactMatchEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        let key = normalize_name(text);
        let mut map = self.interned.lock().expect("poisoned");
        let next = map.len();
        let idx = *map.entry(key).or_insert(next);
        let mut v = vec![0.0; idx + 1];
        v[idx] = 1.0;
        Ok(v)
    }
}

/// Pseudo-random unit-scale vectors seeded by a hash of the normalized text.
#[derive(Debug, Clone, Copy)]
pub struct HashEmbedder {
    pub seed: u64,
    pub dim: usize,
}

impl Embedder for HashEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed_of(self.seed, &normalize_name(text)));
        Ok((0..self.dim).map(|_| rng.random_range(-1.0..1.0)).collect())
    }
}

/// Hashed character-trigram counts over the normalized, space-padded text.
/// Gives graded similarity between spelling variants without a model.
#[derive(Debug, Clone, Copy)]
pub struct TrigramEmbedder {
    pub dim: usize,
}

impl Default for TrigramEmbedder {
    fn default() -> Self {
        Self { dim: 4096 }
    }
}

impl Embedder for TrigramEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        let padded: Vec<char> = format!("  {}  ", normalize_name(text)).chars().collect();
        let mut v = vec![0.0; self.dim.max(1)];
        for w in padded.windows(3) {
            let gram: String = w.iter().collect();
            let slot = (seed_of(0, &gram) % v.len() as u64) as usize;
            v[slot] += 1.0;
        }
        Ok(v)
    }
}

/// Precomputed vectors looked up by normalized text.
#[derive(Debug, Clone, Default)]
pub struct StoreEmbedder {
    vectors: HashMap<String, Vec<f64>>,
}

#[derive(Deserialize)]
struct VectorLine {
    concept: String,
    vector: Vec<f64>,
}

impl StoreEmbedder {
    pub fn from_pairs<S: AsRef<str>>(pairs: impl IntoIterator<Item = (S, Vec<f64>)>) -> Self {
        Self {
            vectors: pairs
                .into_iter()
                .map(|(k, v)| (normalize_name(k.as_ref()), v))
                .collect(),
        }
    }

    /// Reads the `{"concept": text, "vector": [...]}` JSON Lines format.
    pub fn from_jsonl<R: BufRead>(reader: R) -> Result<Self, IoError> {
        let lines: Vec<VectorLine> = read_jsonl(reader)?;
        Ok(Self::from_pairs(lines.into_iter().map(|l| (l.concept, l.vector))))
    }
}

impl Embedder for StoreEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        self.vectors
            .get(&normalize_name(text))
            .cloned()
            .ok_or_else(|| EmbedError(format!("no vector stored for {text:?}")))
    }
}
