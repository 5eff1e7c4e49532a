use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};

use ndarray::{Array2, Zip};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tracing::debug;

use super::{EdgePrediction, EmbeddingStore, LinkPredError};
use crate::graph::{ConceptGraph, ConceptId};
use crate::io::LabeledPair;
use crate::text::normalize_name;

/// D^-1/2 A D^-1/2 with D the row sums of A (of A + I when
/// `add_self_loops`). Zero-degree rows and columns stay zero.
pub fn normalize_adjacency(a: &Array2<u8>, add_self_loops: bool) -> Result<Array2<f64>, LinkPredError> {
    let (rows, cols) = a.dim();
    if rows != cols {
        return Err(LinkPredError::NonSquare { rows, cols });
    }
    if a.iter().any(|&v| v > 1) {
        return Err(LinkPredError::NonBinary);
    }
    let mut m = a.mapv(f64::from);
    if add_self_loops {
        for i in 0..rows {
            m[[i, i]] = 1.0;
        }
    }
    let inv_sqrt: Vec<f64> = m
        .rows()
        .into_iter()
        .map(|r| {
            let d = r.sum();
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    for ((i, j), v) in m.indexed_iter_mut() {
        *v *= inv_sqrt[i] * inv_sqrt[j];
    }
    Ok(m)
}

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^s) without overflow.
fn softplus(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

fn bilinear(xhat: &Array2<f64>, r: &Array2<f64>) -> Result<Array2<f64>, LinkPredError> {
    if r.nrows() != xhat.ncols() || r.ncols() != xhat.ncols() {
        return Err(LinkPredError::DimensionMismatch {
            what: "scorer",
            expected: xhat.ncols(),
            found: r.nrows(),
        });
    }
    Ok(xhat.dot(r).dot(&xhat.t()))
}

/// Edge probabilities sigmoid(X̂ R X̂ᵀ); entry (i, j) scores edge i→j.
pub fn score_edges(xhat: &Array2<f64>, r: &Array2<f64>) -> Result<Array2<f64>, LinkPredError> {
    Ok(bilinear(xhat, r)?.mapv(sigmoid))
}

/// Layer widths: input → `proj_dim` by a linear map, then one graph
/// convolution per entry of `layers`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GcnShape {
    pub proj_dim: usize,
    pub layers: Vec<usize>,
}

impl Default for GcnShape {
    fn default() -> Self {
        Self {
            proj_dim: 256,
            layers: vec![128],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Negatives per positive; labeled negatives are topped up with random
    /// unlabeled non-edges until this ratio is reached.
    pub negative_ratio: f64,
    pub edge_threshold: f64,
    pub momentum: f64,
    /// Half-width of the uniform initialization range.
    pub init_scale: f64,
    pub add_self_loops: bool,
    pub shape: GcnShape,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 200,
            seed: 0,
            negative_ratio: 1.0,
            edge_threshold: 0.5,
            momentum: 0.0,
            init_scale: 0.05,
            add_self_loops: true,
            shape: GcnShape::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), LinkPredError> {
        let bad = |m: &str| Err(LinkPredError::BadConfig(m.to_string()));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be a non-negative number");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if !(self.negative_ratio > 0.0 && self.negative_ratio.is_finite()) {
            return bad("negative_ratio must be positive");
        }
        if !(self.edge_threshold > 0.0 && self.edge_threshold < 1.0) {
            return bad("edge_threshold must lie in (0, 1)");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return bad("init_scale must be positive");
        }
        if self.shape.proj_dim == 0 || self.shape.layers.contains(&0) {
            return bad("layer widths must be positive");
        }
        Ok(())
    }
}

/// A labeled ordered pair of row indices into the feature matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainingPair {
    pub source: usize,
    pub target: usize,
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel {
    pub proj: Array2<f64>,
    pub layers: Vec<Array2<f64>>,
    pub scorer: Array2<f64>,
    pub add_self_loops: bool,
}

/// Loss gradients, shaped like the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnGradients {
    pub proj: Array2<f64>,
    pub layers: Vec<Array2<f64>>,
    pub scorer: Array2<f64>,
}

impl GcnGradients {
    /// Projection, then each convolution, then the scorer.
    pub fn matrices(&self) -> Vec<&Array2<f64>> {
        std::iter::once(&self.proj)
            .chain(&self.layers)
            .chain(std::iter::once(&self.scorer))
            .collect()
    }
}

struct Cache {
    /// H_0 .. H_L
    h: Vec<Array2<f64>>,
    /// Â H_l
    m: Vec<Array2<f64>>,
    /// pre-activations Â H_l W_l
    z: Vec<Array2<f64>>,
}

impl GcnModel {
    pub fn init(input_dim: usize, shape: &GcnShape, init_scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw =
            |r: usize, c: usize| Array2::from_shape_simple_fn((r, c), || rng.random_range(-init_scale..=init_scale));
        let proj = draw(input_dim, shape.proj_dim);
        let mut width = shape.proj_dim;
        let mut layers = Vec::with_capacity(shape.layers.len());
        for &w in &shape.layers {
            layers.push(draw(width, w));
            width = w;
        }
        let scorer = draw(width, width);
        Self {
            proj,
            layers,
            scorer,
            add_self_loops: true,
        }
    }

    pub fn output_dim(&self) -> usize {
        self.scorer.nrows()
    }

    pub fn parameters(&self) -> Vec<&Array2<f64>> {
        std::iter::once(&self.proj)
            .chain(&self.layers)
            .chain(std::iter::once(&self.scorer))
            .collect()
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Array2<f64>> {
        std::iter::once(&mut self.proj)
            .chain(&mut self.layers)
            .chain(std::iter::once(&mut self.scorer))
            .collect()
    }

    fn check_shapes(&self) -> Result<(), LinkPredError> {
        let mut width = self.proj.ncols();
        for w in &self.layers {
            if w.nrows() != width {
                return Err(LinkPredError::DimensionMismatch {
                    what: "convolution weight",
                    expected: width,
                    found: w.nrows(),
                });
            }
            width = w.ncols();
        }
        if self.scorer.dim() != (width, width) {
            return Err(LinkPredError::DimensionMismatch {
                what: "scorer",
                expected: width,
                found: self.scorer.nrows(),
            });
        }
        Ok(())
    }

    fn forward_cache(&self, x: &Array2<f64>, a_norm: &Array2<f64>) -> Result<Cache, LinkPredError> {
        self.check_shapes()?;
        if x.ncols() != self.proj.nrows() {
            return Err(LinkPredError::DimensionMismatch {
                what: "feature matrix",
                expected: self.proj.nrows(),
                found: x.ncols(),
            });
        }
        let (rows, cols) = a_norm.dim();
        if rows != cols {
            return Err(LinkPredError::NonSquare { rows, cols });
        }
        if rows != x.nrows() {
            return Err(LinkPredError::DimensionMismatch {
                what: "adjacency",
                expected: x.nrows(),
                found: rows,
            });
        }
        let mut cache = Cache {
            h: vec![x.dot(&self.proj)],
            m: Vec::with_capacity(self.layers.len()),
            z: Vec::with_capacity(self.layers.len()),
        };
        for w in &self.layers {
            let m = a_norm.dot(cache.h.last().expect("nonempty"));
            let z = m.dot(w);
            cache.h.push(z.mapv(|v| v.max(0.0)));
            cache.m.push(m);
            cache.z.push(z);
        }
        Ok(cache)
    }

    /// Node representations X̂ (last hidden layer).
    pub fn forward(&self, x: &Array2<f64>, a_norm: &Array2<f64>) -> Result<Array2<f64>, LinkPredError> {
        Ok(self.forward_cache(x, a_norm)?.h.pop().expect("nonempty"))
    }

    /// Edge probability matrix for all ordered node pairs.
    pub fn score(&self, x: &Array2<f64>, a_norm: &Array2<f64>) -> Result<Array2<f64>, LinkPredError> {
        score_edges(&self.forward(x, a_norm)?, &self.scorer)
    }

    /// Mean binary cross-entropy over `pairs`.
    pub fn loss(&self, x: &Array2<f64>, a_norm: &Array2<f64>, pairs: &[TrainingPair]) -> Result<f64, LinkPredError> {
        let xhat = self.forward(x, a_norm)?;
        let s = bilinear(&xhat, &self.scorer)?;
        mean_bce(&s, pairs)
    }

    /// Mean binary cross-entropy and its gradient w.r.t. every parameter.
    pub fn loss_and_grad(
        &self,
        x: &Array2<f64>,
        a_norm: &Array2<f64>,
        pairs: &[TrainingPair],
    ) -> Result<(f64, GcnGradients), LinkPredError> {
        let cache = self.forward_cache(x, a_norm)?;
        let xhat = cache.h.last().expect("nonempty");
        let s = bilinear(xhat, &self.scorer)?;
        let loss = mean_bce(&s, pairs)?;

        let n = x.nrows();
        let scale = 1.0 / pairs.len() as f64;
        let mut g = Array2::<f64>::zeros((n, n));
        for p in pairs {
            let y = if p.label { 1.0 } else { 0.0 };
            g[[p.source, p.target]] += (sigmoid(s[[p.source, p.target]]) - y) * scale;
        }

        let d_scorer = xhat.t().dot(&g).dot(xhat);
        let mut dh = g.dot(xhat).dot(&self.scorer.t()) + g.t().dot(xhat).dot(&self.scorer);
        let mut d_layers = vec![Array2::zeros((0, 0)); self.layers.len()];
        for l in (0..self.layers.len()).rev() {
            let mut dz = dh;
            Zip::from(&mut dz).and(&cache.z[l]).for_each(|d, &z| {
                if z <= 0.0 {
                    *d = 0.0;
                }
            });
            d_layers[l] = cache.m[l].t().dot(&dz);
            dh = a_norm.t().dot(&dz.dot(&self.layers[l].t()));
        }
        let d_proj = x.t().dot(&dh);
        Ok((
            loss,
            GcnGradients {
                proj: d_proj,
                layers: d_layers,
                scorer: d_scorer,
            },
        ))
    }

    /// Full-batch gradient descent with optional momentum. Returns the loss
    /// before each epoch followed by the final loss.
    pub fn fit(
        &mut self,
        x: &Array2<f64>,
        a_norm: &Array2<f64>,
        pairs: &[TrainingPair],
        config: &TrainConfig,
    ) -> Result<Vec<f64>, LinkPredError> {
        config.validate()?;
        let mut velocity: Vec<Array2<f64>> = self.parameters().iter().map(|p| Array2::zeros(p.dim())).collect();
        let mut history = Vec::with_capacity(config.epochs + 1);
        for epoch in 0..config.epochs {
            let (loss, grads) = self.loss_and_grad(x, a_norm, pairs)?;
            if !loss.is_finite() {
                return Err(LinkPredError::Diverged(epoch));
            }
            history.push(loss);
            if epoch % 50 == 0 {
                debug!(epoch, loss, "gcn training");
            }
            for ((param, grad), vel) in self
                .parameters_mut()
                .into_iter()
                .zip(grads.matrices())
                .zip(&mut velocity)
            {
                Zip::from(&mut *vel)
                    .and(grad)
                    .for_each(|v, &g| *v = config.momentum * *v - config.learning_rate * g);
                *param += &*vel;
            }
        }
        history.push(self.loss(x, a_norm, pairs)?);
        Ok(history)
    }

    pub fn to_checkpoint(&self) -> GcnCheckpoint {
        GcnCheckpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            add_self_loops: self.add_self_loops,
            proj: MatrixJson::from(&self.proj),
            layers: self.layers.iter().map(MatrixJson::from).collect(),
            scorer: MatrixJson::from(&self.scorer),
        }
    }

    pub fn from_checkpoint(ckpt: GcnCheckpoint) -> Result<Self, LinkPredError> {
        if ckpt.format != CHECKPOINT_FORMAT || ckpt.version != CHECKPOINT_VERSION {
            return Err(LinkPredError::Checkpoint(format!(
                "unsupported format {} v{}",
                ckpt.format, ckpt.version
            )));
        }
        let model = Self {
            proj: ckpt.proj.into_array()?,
            layers: ckpt
                .layers
                .into_iter()
                .map(MatrixJson::into_array)
                .collect::<Result<_, _>>()?,
            scorer: ckpt.scorer.into_array()?,
            add_self_loops: ckpt.add_self_loops,
        };
        model.check_shapes()?;
        if model.parameters().iter().any(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(LinkPredError::Checkpoint("non-finite parameter".into()));
        }
        Ok(model)
    }

    pub fn save<W: Write>(&self, w: W) -> Result<(), LinkPredError> {
        serde_json::to_writer(w, &self.to_checkpoint()).map_err(|e| LinkPredError::Checkpoint(e.to_string()))
    }

    pub fn load<R: Read>(r: R) -> Result<Self, LinkPredError> {
        let ckpt: GcnCheckpoint = serde_json::from_reader(r).map_err(|e| LinkPredError::Checkpoint(e.to_string()))?;
        Self::from_checkpoint(ckpt)
    }
}

fn mean_bce(logits: &Array2<f64>, pairs: &[TrainingPair]) -> Result<f64, LinkPredError> {
    if pairs.is_empty() {
        return Err(LinkPredError::DegenerateLabels);
    }
    let n = logits.nrows();
    let mut total = 0.0;
    for p in pairs {
        if p.source >= n || p.target >= n {
            return Err(LinkPredError::DimensionMismatch {
                what: "training pair index",
                expected: n,
                found: p.source.max(p.target),
            });
        }
        let s = logits[[p.source, p.target]];
        total += softplus(s) - if p.label { s } else { 0.0 };
    }
    Ok(total / pairs.len() as f64)
}

const CHECKPOINT_FORMAT: &str = "cgraph-gcn";
const CHECKPOINT_VERSION: u32 = 1;

/// Row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl From<&Array2<f64>> for MatrixJson {
    fn from(a: &Array2<f64>) -> Self {
        Self {
            rows: a.nrows(),
            cols: a.ncols(),
            data: a.iter().copied().collect(),
        }
    }
}

impl MatrixJson {
    fn into_array(self) -> Result<Array2<f64>, LinkPredError> {
        let (r, c) = (self.rows, self.cols);
        Array2::from_shape_vec((r, c), self.data)
            .map_err(|_| LinkPredError::Checkpoint(format!("matrix data does not fit {r}x{c}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcnCheckpoint {
    pub format: String,
    pub version: u32,
    pub add_self_loops: bool,
    pub proj: MatrixJson,
    pub layers: Vec<MatrixJson>,
    pub scorer: MatrixJson,
}

/// A trained model together with the graph it propagates over.
#[derive(Debug, Clone)]
pub struct TrainedGcn {
    pub model: GcnModel,
    pub ordering: Vec<ConceptId>,
    pub features: Array2<f64>,
    pub adjacency: Array2<f64>,
    pub loss_history: Vec<f64>,
    pub threshold: f64,
    index: HashMap<ConceptId, usize>,
    scores: Array2<f64>,
}

impl TrainedGcn {
    pub fn scores(&self) -> &Array2<f64> {
        &self.scores
    }

    pub fn probability(
        &self,
        graph: &ConceptGraph,
        source: ConceptId,
        target: ConceptId,
    ) -> Result<f64, LinkPredError> {
        let row = |id: ConceptId| {
            self.index.get(&id).copied().ok_or_else(|| {
                LinkPredError::MissingEmbedding(graph.name(id).map_or_else(|| id.to_string(), str::to_string))
            })
        };
        Ok(self.scores[[row(source)?, row(target)?]])
    }

    pub fn predict(
        &self,
        graph: &ConceptGraph,
        pairs: &[(ConceptId, ConceptId)],
    ) -> Result<Vec<EdgePrediction>, LinkPredError> {
        pairs
            .iter()
            .map(|&(source, target)| {
                let probability = self.probability(graph, source, target)?;
                Ok(EdgePrediction {
                    source,
                    target,
                    probability,
                    label: probability >= self.threshold,
                })
            })
            .collect()
    }
}

/// Trains a GCN over every concept of `graph` that has an embedding.
///
/// The message-passing adjacency holds the positive labels. Every labeled
/// concept must have an embedding and both classes must be present.
pub fn train_gcn(
    graph: &ConceptGraph,
    embeddings: &EmbeddingStore,
    labels: &[LabeledPair],
    config: &TrainConfig,
) -> Result<TrainedGcn, LinkPredError> {
    config.validate()?;
    for l in labels {
        for id in [l.source, l.target] {
            let name = graph.name(id).unwrap_or_default();
            if embeddings.get(name).is_none() {
                return Err(LinkPredError::MissingEmbedding(if name.is_empty() {
                    id.to_string()
                } else {
                    name.to_string()
                }));
            }
        }
    }
    let ordering: Vec<ConceptId> = graph
        .concepts()
        .filter(|c| embeddings.get(&normalize_name(&c.name)).is_some())
        .map(|c| c.id)
        .collect();
    let index: HashMap<ConceptId, usize> = ordering.iter().enumerate().map(|(i, &id)| (id, i)).collect();

    let mut pairs: Vec<TrainingPair> = labels
        .iter()
        .filter(|l| l.source != l.target)
        .map(|l| TrainingPair {
            source: index[&l.source],
            target: index[&l.target],
            label: l.is_positive(),
        })
        .collect();
    let positives = pairs.iter().filter(|p| p.label).count();
    let negatives = pairs.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(LinkPredError::DegenerateLabels);
    }
    let wanted = (config.negative_ratio * positives as f64).ceil() as usize;
    if wanted > negatives {
        let labeled: BTreeSet<(usize, usize)> = pairs.iter().map(|p| (p.source, p.target)).collect();
        let n = ordering.len();
        let pool: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && !labeled.contains(&(i, j)))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x9e37_79b9));
        pairs.extend(
            pool.choose_multiple(&mut rng, wanted - negatives)
                .map(|&(source, target)| TrainingPair {
                    source,
                    target,
                    label: false,
                }),
        );
    }

    let mut adj = Array2::<u8>::zeros((ordering.len(), ordering.len()));
    for p in pairs.iter().filter(|p| p.label) {
        adj[[p.source, p.target]] = 1;
    }
    let adjacency = normalize_adjacency(&adj, config.add_self_loops)?;
    let features = embeddings.features(graph, &ordering)?;
    let mut model = GcnModel::init(embeddings.dim(), &config.shape, config.init_scale, config.seed);
    model.add_self_loops = config.add_self_loops;
    let loss_history = model.fit(&features, &adjacency, &pairs, config)?;
    let scores = model.score(&features, &adjacency)?;
    Ok(TrainedGcn {
        model,
        ordering,
        features,
        adjacency,
        loss_history,
        threshold: config.edge_threshold,
        index,
        scores,
    })
}
