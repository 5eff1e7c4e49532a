use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EmbeddingStore, LinkPredError, TrainConfig};
use crate::graph::{ConceptGraph, ConceptId};
use crate::io::LabeledPair;

/// Probability and thresholded decision for one ordered pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgePrediction {
    pub source: ConceptId,
    pub target: ConceptId,
    pub probability: f64,
    pub label: bool,
}

/// Logistic regression over `[x_source, x_target]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcatModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl ConcatModel {
    pub fn probability(&self, source: &[f64], target: &[f64]) -> f64 {
        let z = self.bias
            + source
                .iter()
                .chain(target)
                .zip(&self.weights)
                .map(|(x, w)| x * w)
                .sum::<f64>();
        1.0 / (1.0 + (-z).exp())
    }
}

fn pair_features<'a>(
    graph: &ConceptGraph,
    store: &'a EmbeddingStore,
    a: ConceptId,
    b: ConceptId,
) -> Result<(&'a [f64], &'a [f64]), LinkPredError> {
    let lookup = |id: ConceptId| {
        let name = graph.name(id).unwrap_or_default();
        store.get(name).ok_or_else(|| {
            LinkPredError::MissingEmbedding(if name.is_empty() {
                id.to_string()
            } else {
                name.to_string()
            })
        })
    };
    Ok((lookup(a)?, lookup(b)?))
}

/// Fits logistic regression on the concatenated embeddings of the training
/// pairs by full-batch gradient descent, then scores `test_pairs`.
pub fn classify_concat(
    graph: &ConceptGraph,
    embeddings: &EmbeddingStore,
    train_edges: &[LabeledPair],
    test_pairs: &[(ConceptId, ConceptId)],
    config: &TrainConfig,
) -> Result<(ConcatModel, Vec<EdgePrediction>), LinkPredError> {
    config.validate()?;
    let rows: Vec<(&[f64], &[f64], f64)> = train_edges
        .iter()
        .map(|l| {
            let (a, b) = pair_features(graph, embeddings, l.source, l.target)?;
            Ok((a, b, if l.is_positive() { 1.0 } else { 0.0 }))
        })
        .collect::<Result<_, LinkPredError>>()?;
    if !rows.iter().any(|r| r.2 == 1.0) || !rows.iter().any(|r| r.2 == 0.0) {
        return Err(LinkPredError::DegenerateLabels);
    }
    let d = embeddings.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = ConcatModel {
        weights: (0..2 * d)
            .map(|_| rng.random_range(-config.init_scale..=config.init_scale))
            .collect(),
        bias: 0.0,
    };
    let m = rows.len() as f64;
    for _ in 0..config.epochs {
        let mut gw = vec![0.0; 2 * d];
        let mut gb = 0.0;
        for (a, b, y) in &rows {
            let err = (model.probability(a, b) - y) / m;
            for (g, x) in gw.iter_mut().zip(a.iter().chain(b.iter())) {
                *g += err * x;
            }
            gb += err;
        }
        for (w, g) in model.weights.iter_mut().zip(&gw) {
            *w -= config.learning_rate * g;
        }
        model.bias -= config.learning_rate * gb;
    }
    let predictions = test_pairs
        .iter()
        .map(|&(source, target)| {
            let (a, b) = pair_features(graph, embeddings, source, target)?;
            let probability = model.probability(a, b);
            Ok(EdgePrediction {
                source,
                target,
                probability,
                label: probability >= config.edge_threshold,
            })
        })
        .collect::<Result<_, LinkPredError>>()?;
    Ok((model, predictions))
}
