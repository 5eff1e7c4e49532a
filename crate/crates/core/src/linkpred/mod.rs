//! Supervised concept-link prediction from concept embeddings.
//!
//! Two predictors are provided: a logistic-regression classifier over the
//! concatenated pair embedding, and a GCN encoder with a bilinear edge
//! scorer trained by full-batch gradient descent.

mod concat;
mod gcn;

use std::collections::HashMap;
use std::io::BufRead;

use ndarray::Array2;
use serde::Deserialize;
use thiserror::Error;

use crate::graph::{ConceptGraph, ConceptId};
use crate::io::{read_jsonl, IoError};
use crate::text::normalize_name;

pub use concat::{classify_concat, ConcatModel, EdgePrediction};
pub use gcn::{
    normalize_adjacency, score_edges, train_gcn, GcnCheckpoint, GcnGradients, GcnModel, GcnShape, MatrixJson,
    TrainConfig, TrainedGcn, TrainingPair,
};

#[derive(Debug, Error)]
pub enum LinkPredError {
    #[error("adjacency must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },
    #[error("adjacency entries must be 0 or 1")]
    NonBinary,
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("no embedding for concept {0:?}")]
    MissingEmbedding(String),
    #[error("embedding for {concept:?} has dimension {found}, store uses {expected}")]
    InconsistentDimension {
        concept: String,
        expected: usize,
        found: usize,
    },
    #[error("embedding for {0:?} has a non-finite entry")]
    NonFinite(String),
    #[error("training needs at least one positive and one negative label")]
    DegenerateLabels,
    #[error("training diverged at epoch {0}")]
    Diverged(usize),
    #[error("invalid training config: {0}")]
    BadConfig(String),
    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] IoError),
}

/// Concept vectors keyed by normalized concept name, all of one dimension.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingStore {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

#[derive(Deserialize)]
struct EmbeddingLine {
    concept: String,
    vector: Vec<f64>,
}

impl EmbeddingStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces a vector. The first insert fixes the dimension.
    pub fn insert(&mut self, concept: &str, vector: Vec<f64>) -> Result<(), LinkPredError> {
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(LinkPredError::NonFinite(concept.to_string()));
        }
        if self.vectors.is_empty() {
            self.dim = vector.len();
        } else if vector.len() != self.dim {
            return Err(LinkPredError::InconsistentDimension {
                concept: concept.to_string(),
                expected: self.dim,
                found: vector.len(),
            });
        }
        self.vectors.insert(normalize_name(concept), vector);
        Ok(())
    }

    /// Reads `{"concept": text, "vector": [...]}` lines.
    pub fn from_jsonl<R: BufRead>(reader: R) -> Result<Self, LinkPredError> {
        let mut store = Self::new();
        for line in read_jsonl::<EmbeddingLine, _>(reader)? {
            store.insert(&line.concept, line.vector)?;
        }
        Ok(store)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, concept: &str) -> Option<&[f64]> {
        self.vectors.get(&normalize_name(concept)).map(Vec::as_slice)
    }

    /// Feature matrix with one row per id in `ordering`.
    pub fn features(&self, graph: &ConceptGraph, ordering: &[ConceptId]) -> Result<Array2<f64>, LinkPredError> {
        let mut x = Array2::zeros((ordering.len(), self.dim));
        for (row, &id) in ordering.iter().enumerate() {
            let name = graph.name(id).unwrap_or_default();
            let v = self
                .get(name)
                .ok_or_else(|| LinkPredError::MissingEmbedding(name.to_string()))?;
            x.row_mut(row).assign(&ndarray::ArrayView1::from(v));
        }
        Ok(x)
    }
}
