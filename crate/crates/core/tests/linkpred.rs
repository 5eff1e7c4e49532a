mod common;

use cgraph::graph::ConceptId;
use cgraph::linkpred::{
    classify_concat, normalize_adjacency, score_edges, train_gcn, EmbeddingStore, GcnModel, GcnShape, LinkPredError,
    TrainConfig, TrainingPair,
};
use common::*;
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-1.0..1.0))
}

fn random_adjacency(n: usize, rng: &mut ChaCha8Rng) -> Array2<u8> {
    Array2::from_shape_fn((n, n), |(i, j)| u8::from(i != j && rng.random_bool(0.3)))
}

type Mat = Vec<Vec<f64>>;

fn to_vec(a: &Array2<f64>) -> Mat {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn matmul(a: &Mat, b: &Mat) -> Mat {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in 0..m {
            for t in 0..k {
                out[i][j] += a[i][t] * b[t][j];
            }
        }
    }
    out
}

/// Step-by-step evaluation with plain loops: degree vector, scaled
/// adjacency, projection, then each propagate/multiply/ReLU step.
fn straight_line_forward(model: &GcnModel, x: &Array2<f64>, adj: &Array2<u8>, self_loops: bool) -> Mat {
    let n = adj.nrows();
    let mut a: Mat = (0..n)
        .map(|i| (0..n).map(|j| f64::from(adj[[i, j]])).collect())
        .collect();
    if self_loops {
        for (i, row) in a.iter_mut().enumerate() {
            row[i] = 1.0;
        }
    }
    let deg: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    for i in 0..n {
        for j in 0..n {
            if deg[i] > 0.0 && deg[j] > 0.0 {
                a[i][j] /= deg[i].sqrt() * deg[j].sqrt();
            } else {
                a[i][j] = 0.0;
            }
        }
    }
    let mut h = matmul(&to_vec(x), &to_vec(&model.proj));
    for w in &model.layers {
        h = matmul(&matmul(&a, &h), &to_vec(w));
        for row in &mut h {
            for v in row {
                *v = v.max(0.0);
            }
        }
    }
    h
}

fn random_pairs(n: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<TrainingPair> {
    (0..count)
        .map(|k| {
            let source = rng.random_range(0..n);
            let mut target = rng.random_range(0..n);
            if target == source {
                target = (target + 1) % n;
            }
            TrainingPair {
                source,
                target,
                label: k % 2 == 0,
            }
        })
        .collect()
}

#[test]
fn forward_matches_straight_line_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for self_loops in [true, false] {
        let adj = random_adjacency(5, &mut rng);
        let x = random_matrix(5, 6, &mut rng);
        let model = GcnModel::init(
            6,
            &GcnShape {
                proj_dim: 4,
                layers: vec![4, 3],
            },
            0.8,
            5,
        );
        let got = model
            .forward(&x, &normalize_adjacency(&adj, self_loops).unwrap())
            .unwrap();
        let want = straight_line_forward(&model, &x, &adj, self_loops);
        for i in 0..5 {
            for j in 0..3 {
                assert!((got[[i, j]] - want[i][j]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn scores_match_triple_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let xhat = random_matrix(5, 4, &mut rng);
    let r = random_matrix(4, 4, &mut rng);
    let s = score_edges(&xhat, &r).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            let mut z = 0.0;
            for k in 0..4 {
                for l in 0..4 {
                    z += xhat[[i, k]] * r[[k, l]] * xhat[[j, l]];
                }
            }
            assert!((s[[i, j]] - 1.0 / (1.0 + (-z).exp())).abs() < 1e-12);
            assert!(s[[i, j]] > 0.0 && s[[i, j]] < 1.0);
        }
    }
}

/// Central differences on every parameter entry; relative error uses
/// max(|analytic|, |numeric|, 1e-6) as denominator.
fn gradient_check(shape: GcnShape, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 6;
    let adj = random_adjacency(n, &mut rng);
    let a = normalize_adjacency(&adj, true).unwrap();
    let x = random_matrix(n, 8, &mut rng);
    let pairs = random_pairs(n, 10, &mut rng);
    let model = GcnModel::init(8, &shape, 0.5, seed);
    let (_, grads) = model.loss_and_grad(&x, &a, &pairs).unwrap();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for (p, g) in grads.matrices().into_iter().enumerate() {
        for idx in 0..g.len() {
            let (r, c) = (idx / g.ncols(), idx % g.ncols());
            let mut plus = model.clone();
            plus.parameters_mut()[p][[r, c]] += h;
            let mut minus = model.clone();
            minus.parameters_mut()[p][[r, c]] -= h;
            let numeric = (plus.loss(&x, &a, &pairs).unwrap() - minus.loss(&x, &a, &pairs).unwrap()) / (2.0 * h);
            let analytic = g[[r, c]];
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    worst
}

#[test]
fn gradients_match_finite_differences() {
    for seed in 0..3 {
        let worst = gradient_check(
            GcnShape {
                proj_dim: 4,
                layers: vec![3],
            },
            seed,
        );
        assert!(worst < 1e-4, "seed {seed}: {worst}");
        let worst = gradient_check(
            GcnShape {
                proj_dim: 5,
                layers: vec![4, 3],
            },
            seed,
        );
        assert!(worst < 1e-4, "two layers, seed {seed}: {worst}");
    }
}

#[test]
fn forward_is_permutation_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let model = GcnModel::init(
        5,
        &GcnShape {
            proj_dim: 4,
            layers: vec![3],
        },
        0.7,
        2,
    );
    for _ in 0..20 {
        let n = 7;
        let adj = random_adjacency(n, &mut rng);
        let x = random_matrix(n, 5, &mut rng);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let padj = Array2::from_shape_fn((n, n), |(i, j)| adj[[perm[i], perm[j]]]);
        let px = Array2::from_shape_fn((n, 5), |(i, j)| x[[perm[i], j]]);
        let out = model.forward(&x, &normalize_adjacency(&adj, true).unwrap()).unwrap();
        let pout = model.forward(&px, &normalize_adjacency(&padj, true).unwrap()).unwrap();
        for i in 0..n {
            for j in 0..3 {
                assert!((pout[[i, j]] - out[[perm[i], j]]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn scores_increase_with_scorer_entries_on_positive_support() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let xhat = Array2::from_shape_simple_fn((4, 3), || rng.random_range(0.1..1.0));
    let r = random_matrix(3, 3, &mut rng);
    let base = score_edges(&xhat, &r).unwrap();
    for k in 0..3 {
        for l in 0..3 {
            let mut r2 = r.clone();
            r2[[k, l]] += 0.25;
            let bumped = score_edges(&xhat, &r2).unwrap();
            assert!(bumped.iter().zip(base.iter()).all(|(b, a)| b > a));
        }
    }
}

fn learn_config(seed: u64) -> TrainConfig {
    TrainConfig {
        learning_rate: 0.5,
        epochs: 200,
        seed,
        init_scale: 0.3,
        shape: GcnShape {
            proj_dim: 16,
            layers: vec![8],
        },
        ..Default::default()
    }
}

#[test]
fn gcn_learns_separable_clusters() {
    for seed in 0..3 {
        let inst = cluster_instance(4, 10, 16, 40, 40, seed);
        let trained = train_gcn(&inst.graph, &inst.store, &inst.labels, &learn_config(seed)).unwrap();
        let pairs: Vec<_> = inst.labels.iter().map(|l| (l.source, l.target)).collect();
        let pred: Vec<bool> = trained
            .predict(&inst.graph, &pairs)
            .unwrap()
            .iter()
            .map(|p| p.label)
            .collect();
        let gold: Vec<bool> = inst.labels.iter().map(|l| l.is_positive()).collect();
        assert!(f1_of(&pred, &gold) >= 0.95, "seed {seed}");
        assert!(trained.loss_history.last().unwrap() <= &trained.loss_history[0]);
        let again = train_gcn(&inst.graph, &inst.store, &inst.labels, &learn_config(seed)).unwrap();
        assert_eq!(again.model, trained.model);
    }
}

#[test]
fn training_errors() {
    let inst = cluster_instance(2, 3, 4, 2, 2, 0);
    let only_pos: Vec<_> = inst.labels.iter().filter(|l| l.is_positive()).cloned().collect();
    assert!(matches!(
        train_gcn(&inst.graph, &inst.store, &only_pos, &learn_config(0)),
        Err(LinkPredError::DegenerateLabels)
    ));
    let mut partial = EmbeddingStore::new();
    partial.insert("concept 0", vec![1.0; 4]).unwrap();
    assert!(matches!(
        train_gcn(&inst.graph, &partial, &inst.labels, &learn_config(0)),
        Err(LinkPredError::MissingEmbedding(_))
    ));
}

#[test]
fn negative_ratio_tops_up_negatives() {
    let inst = cluster_instance(2, 5, 4, 6, 1, 4);
    let config = TrainConfig {
        negative_ratio: 2.0,
        epochs: 1,
        ..learn_config(0)
    };
    let trained = train_gcn(&inst.graph, &inst.store, &inst.labels, &config).unwrap();
    assert_eq!(trained.ordering.len(), 10);
    // positive labels are the only adjacency entries besides self-loops
    let off_diagonal = trained
        .adjacency
        .indexed_iter()
        .filter(|((i, j), v)| i != j && **v > 0.0)
        .count();
    assert_eq!(off_diagonal, 6);
}

type SignRuleInstance = (
    cgraph::graph::ConceptGraph,
    EmbeddingStore,
    Vec<cgraph::io::LabeledPair>,
    Vec<(ConceptId, ConceptId)>,
    Vec<bool>,
);

fn sign_rule_instance() -> SignRuleInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let n = 30;
    let graph = cgraph::graph::ConceptGraph::from_parts((0..n).map(concept), []).unwrap();
    let mut store = EmbeddingStore::new();
    let mut first = Vec::new();
    for i in 0..n {
        let mut v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        if v[0].abs() < 0.2 {
            v[0] = 0.2f64.copysign(v[0]);
        }
        first.push(v[0]);
        store.insert(&concept(i).name, v).unwrap();
    }
    let mut train = Vec::new();
    for k in 0..60 {
        let (a, b) = (k % n, (k * 7 + 3) % n);
        if a != b {
            train.push(pair(a, b, first[a] > 0.0));
        }
    }
    let test: Vec<(ConceptId, ConceptId)> = (0..n)
        .map(|a| (ConceptId(a as u32), ConceptId(((a + 11) % n) as u32)))
        .collect();
    let gold = test.iter().map(|(a, _)| first[a.0 as usize] > 0.0).collect();
    (graph, store, train, test, gold)
}

#[test]
fn concat_classifier_learns_source_sign_rule() {
    let (graph, store, train, test, gold) = sign_rule_instance();
    let config = TrainConfig {
        learning_rate: 1.0,
        epochs: 500,
        ..Default::default()
    };
    let (_, preds) = classify_concat(&graph, &store, &train, &test, &config).unwrap();
    let correct = preds.iter().zip(&gold).filter(|(p, g)| p.label == **g).count();
    assert_eq!(correct, test.len());
    let swapped: Vec<_> = test.iter().map(|&(a, b)| (b, a)).collect();
    let (_, rev) = classify_concat(&graph, &store, &train, &swapped, &config).unwrap();
    assert!(rev
        .iter()
        .zip(&preds)
        .any(|(r, p)| (r.probability - p.probability).abs() > 1e-6));
}

#[test]
fn concat_identical_embeddings_give_equal_probabilities() {
    let inst = cluster_instance(2, 4, 3, 3, 3, 9);
    let mut store = EmbeddingStore::new();
    for i in 0..8 {
        store.insert(&concept(i).name, vec![0.5, -0.25, 1.0]).unwrap();
    }
    let test: Vec<_> = (0..7).map(|i| (ConceptId(i), ConceptId(i + 1))).collect();
    let (_, preds) = classify_concat(&inst.graph, &store, &inst.labels, &test, &TrainConfig::default()).unwrap();
    assert!(preds.windows(2).all(|w| w[0].probability == w[1].probability));
}

proptest! {
    #[test]
    fn normalization_preserves_symmetry(bits in proptest::collection::vec(any::<bool>(), 36), loops in any::<bool>()) {
        let a = Array2::from_shape_fn((6, 6), |(i, j)| {
            let (lo, hi) = (i.min(j), i.max(j));
            u8::from(bits[lo * 6 + hi])
        });
        let n = normalize_adjacency(&a, loops).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                prop_assert!((n[[i, j]] - n[[j, i]]).abs() < 1e-15);
            }
        }
    }
}
