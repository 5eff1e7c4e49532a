use std::path::PathBuf;

use cgraph::corpus::{ingest_reader, RetrievalIndex, WikiStore, DEFAULT_MIN_WORDS};
use cgraph::graph::ConceptGraph;
use cgraph::io::write_edges;
use cgraph::llm::{ChatClient, MockOracle, Oracle, PromptReplayOracle};
use cgraph::recovery::{
    recover_graph, JudgmentRecord, PromptVariant, RecoveryConfig, RecoveryContext, SamplingMode, SamplingPlan,
    VariantKind,
};
use clap::Args;
use serde::{Deserialize, Serialize};

use super::{concept_graph, domain, in_file, load_concepts, load_pairs, to_json};
use crate::error::CliError;
use crate::manifest::Session;
use crate::settings::{live_endpoint, Settings};
use crate::specs::{JudgeSpec, PairSpec};

#[derive(Debug, Clone, Args, Serialize)]
pub struct RecoverArgs {
    /// Concept TSV: id<TAB>name.
    #[arg(long)]
    pub concepts: PathBuf,
    /// mock-graph:EDGES.tsv, fixture:JUDGMENTS.jsonl, replay:PROMPTS.jsonl, echo or live.
    #[arg(long)]
    pub oracle: JudgeSpec,
    /// zs, cot, zs-doc, zs-con, zs-wiki or zs-rag.
    #[arg(long, default_value = "zs")]
    pub variant: VariantKind,
    /// all, or balanced:N for N positives plus N negatives.
    #[arg(long, default_value = "all")]
    pub pairs: PairSpec,
    /// Labeled pair TSV (source, target, 0/1) for balanced sampling and zs-con.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Plain-text corpus, one document per line, for zs-doc and zs-rag.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// `{"concept", "text"}` JSONL for zs-wiki.
    #[arg(long)]
    pub wiki: Option<PathBuf>,
    /// Verdict flip probability of the mock-graph oracle.
    #[arg(long, default_value_t = 0.0)]
    pub flip: f64,
    /// Domain named in the prompts; overrides the config file
    #[arg(long)]
    pub domain: Option<String>,
    /// Passages retrieved per pair for zs-rag.
    #[arg(long)]
    pub rag_k: Option<usize>,
    /// Neighborhood radius for zs-con.
    #[arg(long)]
    pub con_hops: Option<usize>,
    /// Concurrent oracle calls.
    #[arg(long)]
    pub in_flight: Option<usize>,
}

/// Judgment fixture line plus the prompt that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentLine {
    #[serde(flatten)]
    pub record: JudgmentRecord,
    #[serde(default)]
    pub prompt: String,
    #[serde(default)]
    pub flagged: bool,
}

fn build_variant(args: &RecoverArgs) -> PromptVariant {
    let mut variant = PromptVariant::from_kind(args.variant);
    match &mut variant {
        PromptVariant::ZeroShotRag { k } => *k = args.rag_k.unwrap_or(*k),
        PromptVariant::ZeroShotCon { hops } => *hops = args.con_hops.unwrap_or(*hops),
        _ => {}
    }
    variant
}

fn build_oracle(
    args: &RecoverArgs,
    settings: &Settings,
    session: &mut Session,
    concepts: &ConceptGraph,
) -> Result<Box<dyn Oracle>, CliError> {
    if args.flip != 0.0 && !matches!(args.oracle, JudgeSpec::MockGraph(_)) {
        return Err(CliError::Config("--flip only applies to the mock-graph oracle".into()));
    }
    Ok(match &args.oracle {
        JudgeSpec::MockGraph(path) => {
            let edges = super::load_pairs(session, path)?;
            let hidden = concept_graph(concepts.concepts().cloned().collect(), &edges, path)?;
            Box::new(MockOracle::graph_backed(hidden, args.flip, session.seed).map_err(CliError::Config)?)
        }
        JudgeSpec::Fixture(path) => {
            let bytes = session.read(path)?;
            Box::new(MockOracle::scripted_from_jsonl(&bytes[..]).map_err(|e| in_file(path, e))?)
        }
        JudgeSpec::Replay(path) => {
            let bytes = session.read(path)?;
            Box::new(PromptReplayOracle::from_jsonl(&bytes[..]).map_err(|e| in_file(path, e))?)
        }
        JudgeSpec::Echo => Box::new(MockOracle::Echo),
        JudgeSpec::Live => Box::new(ChatClient::new(live_endpoint(settings.oracle.as_ref(), "oracle")?)),
    })
}

pub fn recover(args: &RecoverArgs, settings: &Settings, session: &mut Session) -> Result<serde_json::Value, CliError> {
    let domain = domain(args.domain.as_ref(), settings);
    let concepts = load_concepts(session, &args.concepts, &domain)?;
    let base = concept_graph(concepts.clone(), &[], &args.concepts)?;

    let labels = match &args.labels {
        Some(p) => Some(load_pairs(session, p)?),
        None => None,
    };
    let training = match (&labels, &args.labels) {
        (Some(l), Some(p)) => Some(concept_graph(concepts, l, p)?),
        _ => None,
    };
    let min_words = settings.min_words.unwrap_or(DEFAULT_MIN_WORDS);
    let documents = match &args.corpus {
        Some(p) => {
            let bytes = session.read(p)?;
            Some(ingest_reader(&bytes[..], min_words, &p.display().to_string()).map_err(|e| in_file(p, e))?)
        }
        None => None,
    };
    let index = documents.as_deref().map(RetrievalIndex::build);
    let wiki = match &args.wiki {
        Some(p) => {
            let bytes = session.read(p)?;
            Some(WikiStore::from_jsonl(&bytes[..]).map_err(|e| in_file(p, e))?)
        }
        None => None,
    };

    let oracle = build_oracle(args, settings, session, &base)?;
    let mut config = RecoveryConfig::new(domain.clone(), build_variant(args));
    config.in_flight = args.in_flight.or(settings.in_flight).unwrap_or(config.in_flight).max(1);
    let max_info_chars = settings
        .max_info_chars
        .unwrap_or(RecoveryContext::default().max_info_chars);
    let ctx = RecoveryContext {
        documents: documents.as_deref(),
        index: index.as_ref(),
        training: training.as_ref(),
        wiki: wiki.as_ref(),
        max_info_chars,
    };
    let plan = SamplingPlan {
        mode: match args.pairs {
            PairSpec::All => SamplingMode::AllOrderedPairs,
            PairSpec::Balanced(n) => SamplingMode::BalancedSample { sample_size: n },
        },
        seed: session.seed,
    };
    let recovered = recover_graph(&base, oracle.as_ref(), &config, &plan, labels.as_deref(), &ctx)?;

    let mut edges = Vec::new();
    write_edges(&mut edges, &recovered.graph).map_err(|e| CliError::data("edges.tsv", e))?;
    session.write("edges.tsv", &edges)?;
    let lines: Vec<JudgmentLine> = recovered
        .judgments
        .iter()
        .map(|j| JudgmentLine {
            record: j.to_record(&base),
            prompt: j.prompt_text.clone(),
            flagged: j.flagged,
        })
        .collect();
    session.write_jsonl("judgments.jsonl", &lines)?;

    let flagged = lines.iter().filter(|l| l.flagged).count();
    println!(
        "judged {} pairs, recovered {} edges ({} flagged)",
        lines.len(),
        recovered.graph.edge_count(),
        flagged
    );
    Ok(serde_json::json!({
        "args": to_json(args),
        "domain": domain,
        "variant": format!("{:?}", config.variant),
        "in_flight": config.in_flight,
        "max_info_chars": max_info_chars,
        "min_words": min_words,
    }))
}
