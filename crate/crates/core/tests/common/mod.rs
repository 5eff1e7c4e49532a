#![allow(dead_code)]

pub mod brute;

use cgraph::graph::{Concept, ConceptGraph, ConceptId};
use cgraph::io::LabeledPair;
use cgraph::linkpred::EmbeddingStore;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn concept(i: usize) -> Concept {
    Concept {
        id: ConceptId(i as u32),
        name: format!("concept {i}"),
        domain: "test".into(),
    }
}

/// Random DAG over `n` nodes: each forward pair (i < j) is an edge with
/// probability `density`, then node names are shuffled so topological order
/// is not the id order.
pub fn random_dag(n: usize, density: f64, seed: u64) -> ConceptGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(density) {
                edges.push((ConceptId(perm[i] as u32), ConceptId(perm[j] as u32)));
            }
        }
    }
    ConceptGraph::from_parts((0..n).map(concept), edges).unwrap()
}

/// Random directed graph, cycles allowed, no self-loops.
pub fn random_digraph(n: usize, density: f64, rng: &mut ChaCha8Rng) -> ConceptGraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random_bool(density) {
                edges.push((ConceptId(i as u32), ConceptId(j as u32)));
            }
        }
    }
    ConceptGraph::from_parts((0..n).map(concept), edges).unwrap()
}

/// Clustered separable instance: `clusters` groups of `size` nodes whose
/// embeddings share a random direction. Positives join nodes of the same
/// cluster, negatives join different clusters.
pub struct ClusterInstance {
    pub graph: ConceptGraph,
    pub store: EmbeddingStore,
    pub labels: Vec<LabeledPair>,
}

pub fn cluster_instance(
    clusters: usize,
    size: usize,
    dim: usize,
    positives: usize,
    negatives: usize,
    seed: u64,
) -> ClusterInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = clusters * size;
    let graph = ConceptGraph::from_parts((0..n).map(concept), []).unwrap();
    let directions: Vec<Vec<f64>> = (0..clusters)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let mut store = EmbeddingStore::new();
    for i in 0..n {
        let v = directions[i / size]
            .iter()
            .map(|x| x + rng.random_range(-0.1..0.1))
            .collect();
        store.insert(&concept(i).name, v).unwrap();
    }
    let mut labels = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    while labels.len() < positives {
        let c = rng.random_range(0..clusters);
        let (a, b) = (
            c * size + rng.random_range(0..size),
            c * size + rng.random_range(0..size),
        );
        if a != b && seen.insert((a, b)) {
            labels.push(pair(a, b, true));
        }
    }
    while labels.len() < positives + negatives {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a / size != b / size && seen.insert((a, b)) {
            labels.push(pair(a, b, false));
        }
    }
    ClusterInstance { graph, store, labels }
}

pub fn pair(a: usize, b: usize, label: bool) -> LabeledPair {
    LabeledPair {
        source: ConceptId(a as u32),
        target: ConceptId(b as u32),
        label: Some(label),
    }
}

/// F1 of thresholded predictions against labels, counted directly.
pub fn f1_of(pred: &[bool], gold: &[bool]) -> f64 {
    let tp = pred.iter().zip(gold).filter(|(p, g)| **p && **g).count() as f64;
    let fp = pred.iter().zip(gold).filter(|(p, g)| **p && !**g).count() as f64;
    let fn_ = pred.iter().zip(gold).filter(|(p, g)| !**p && **g).count() as f64;
    if tp == 0.0 {
        0.0
    } else {
        2.0 * tp / (2.0 * tp + fp + fn_)
    }
}
