use std::fmt::Write as _;
use std::path::PathBuf;

use cgraph::eval::{binary_report, EvalReport};
use cgraph::graph::ConceptId;
use cgraph::io::LabeledPair;
use cgraph::linkpred::{classify_concat, train_gcn, EdgePrediction, EmbeddingStore, TrainConfig};
use cgraph::recovery::Verdict;
use clap::{Args, ValueEnum};
use serde::Serialize;

use super::{concept_graph, domain, in_file, load_concepts, load_pairs, to_json};
use crate::error::CliError;
use crate::manifest::Session;
use crate::settings::Settings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Graph convolutional encoder with a bilinear edge scorer.
    Gcn,
    /// Logistic regression on concatenated endpoint embeddings.
    Concat,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    /// Concept TSV: id<TAB>name.
    #[arg(long)]
    pub concepts: PathBuf,
    /// `{"concept", "vector"}` JSONL.
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Labeled pair TSV for training.
    #[arg(long)]
    pub train: PathBuf,
    /// Pair TSV to predict; labels, when present on every row, are scored.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModelKind::Gcn)]
    pub model: ModelKind,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub init_scale: Option<f64>,
    #[arg(long)]
    pub negative_ratio: Option<f64>,
    /// Probability at or above which a pair is predicted as an edge.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub proj_dim: Option<usize>,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub layers: Option<Vec<usize>>,
    #[arg(long)]
    pub no_self_loops: bool,
    #[arg(long)]
    pub domain: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
struct TrainReport {
    model: ModelKind,
    train_pairs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_loss: Option<f64>,
    train: EvalReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    test: Option<EvalReport>,
    test_pairs: usize,
}

fn resolve_config(args: &TrainArgs, settings: &Settings, seed: u64) -> TrainConfig {
    let mut c = settings.train.clone();
    c.seed = seed;
    c.epochs = args.epochs.unwrap_or(c.epochs);
    c.learning_rate = args.learning_rate.unwrap_or(c.learning_rate);
    c.momentum = args.momentum.unwrap_or(c.momentum);
    c.init_scale = args.init_scale.unwrap_or(c.init_scale);
    c.negative_ratio = args.negative_ratio.unwrap_or(c.negative_ratio);
    c.edge_threshold = args.threshold.unwrap_or(c.edge_threshold);
    c.shape.proj_dim = args.proj_dim.unwrap_or(c.shape.proj_dim);
    if let Some(l) = &args.layers {
        c.shape.layers = l.clone();
    }
    if args.no_self_loops {
        c.add_self_loops = false;
    }
    c
}

fn labels_of(pairs: &[LabeledPair]) -> Option<Vec<Verdict>> {
    pairs.iter().map(|p| p.label.map(Verdict::from_bool)).collect()
}

fn decisions(preds: &[EdgePrediction]) -> Vec<Verdict> {
    preds.iter().map(|p| Verdict::from_bool(p.label)).collect()
}

fn prediction_tsv(preds: &[EdgePrediction]) -> String {
    let mut out = String::new();
    for p in preds {
        let _ = writeln!(
            out,
            "{}\t{}\t{:.6}\t{}",
            p.source,
            p.target,
            p.probability,
            u8::from(p.label)
        );
    }
    out
}

pub fn train(args: &TrainArgs, settings: &Settings, session: &mut Session) -> Result<serde_json::Value, CliError> {
    let config = resolve_config(args, settings, session.seed);
    config.validate()?;
    let concepts = load_concepts(session, &args.concepts, &domain(args.domain.as_ref(), settings))?;
    let graph = concept_graph(concepts, &[], &args.concepts)?;
    let bytes = session.read(&args.embeddings)?;
    let store = EmbeddingStore::from_jsonl(&bytes[..]).map_err(|e| in_file(&args.embeddings, e))?;
    let train_pairs = load_pairs(session, &args.train)?;
    let train_gold =
        labels_of(&train_pairs).ok_or_else(|| in_file(&args.train, "every training pair needs a 0/1 label"))?;
    let test_pairs = match &args.test {
        Some(p) => load_pairs(session, p)?,
        None => Vec::new(),
    };
    let ids = |ps: &[LabeledPair]| -> Vec<(ConceptId, ConceptId)> { ps.iter().map(|p| (p.source, p.target)).collect() };

    let (model_json, train_preds, test_preds, losses) = match args.model {
        ModelKind::Gcn => {
            let trained = train_gcn(&graph, &store, &train_pairs, &config)?;
            let mut buf = Vec::new();
            trained.model.save(&mut buf)?;
            let train_preds = trained.predict(&graph, &ids(&train_pairs))?;
            let test_preds = trained.predict(&graph, &ids(&test_pairs))?;
            let losses = (
                trained.loss_history.first().copied(),
                trained.loss_history.last().copied(),
            );
            (buf, train_preds, test_preds, losses)
        }
        ModelKind::Concat => {
            let mut all = ids(&train_pairs);
            all.extend(ids(&test_pairs));
            let (model, mut preds) = classify_concat(&graph, &store, &train_pairs, &all, &config)?;
            let test_preds = preds.split_off(train_pairs.len());
            let json = serde_json::json!({
                "format": "cgraph-concat",
                "version": 1,
                "weights": model.weights,
                "bias": model.bias,
            });
            let mut buf = serde_json::to_vec_pretty(&json).map_err(|e| CliError::data("model.json", e))?;
            buf.push(b'\n');
            (buf, preds, test_preds, (None, None))
        }
    };

    let train_report = binary_report(&decisions(&train_preds), &train_gold)?;
    let test_report = match labels_of(&test_pairs) {
        Some(gold) if !gold.is_empty() => Some(binary_report(&decisions(&test_preds), &gold)?),
        _ => None,
    };
    session.write("model.json", &model_json)?;
    if args.test.is_some() {
        session.write("predictions.tsv", prediction_tsv(&test_preds).as_bytes())?;
    }
    let report = TrainReport {
        model: args.model,
        train_pairs: train_pairs.len(),
        initial_loss: losses.0,
        final_loss: losses.1,
        train: train_report,
        test: test_report,
        test_pairs: test_pairs.len(),
    };
    session.write_json("report.json", &report)?;
    println!(
        "trained {:?} on {} pairs: train F1 {:.4}{}",
        args.model,
        train_pairs.len(),
        train_report.f1,
        test_report
            .map(|r| format!(", test F1 {:.4}", r.f1))
            .unwrap_or_default()
    );
    Ok(serde_json::json!({ "args": to_json(args), "train": to_json(&config) }))
}
