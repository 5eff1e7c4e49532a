//! Concept-graph recovery from pairwise oracle judgments.
//!
//! Each sampled ordered pair is rendered into a judgment prompt, sent to an
//! [`Oracle`], and the verdict is parsed. The recovered graph contains
//! exactly the pairs judged `Yes`.

mod context;
mod prompt;

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use crate::graph::{ConceptGraph, ConceptId, GraphError};
use crate::io::LabeledPair;
use crate::llm::{Oracle, OracleError};

pub use context::{build_additional_info, RecoveryContext};
pub use prompt::{
    detect_variant, extract_pair, parse_verdict, render_prompt, PromptVariant, VariantKind, Verdict, CONTENTS_HEADER,
    RAG_HEADER, RETRY_SUFFIX,
};

#[derive(Debug, Error)]
pub enum RecoveryError {
    #[error("concept names must be non-empty")]
    EmptyConcept,
    #[error("no YES/NO verdict found in response")]
    UnparseableVerdict,
    #[error("variant {0} needs context that was not supplied: {1}")]
    MissingContext(VariantKind, &'static str),
    #[error("balanced sampling needs labeled pairs")]
    MissingLabels,
    #[error("requested {requested} negatives but only {available} are available")]
    InsufficientNegatives { requested: usize, available: usize },
    #[error("requested {requested} positives but only {available} are available")]
    InsufficientPositives { requested: usize, available: usize },
    #[error("oracle failed on pair ({a:?}, {b:?}): {source}")]
    Oracle {
        a: String,
        b: String,
        #[source]
        source: OracleError,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// One oracle verdict on an ordered concept pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeJudgment {
    pub source: ConceptId,
    pub target: ConceptId,
    pub verdict: Verdict,
    pub variant: VariantKind,
    pub raw_response: String,
    pub prompt_text: String,
    /// Set when no verdict could be parsed even after the retry; the
    /// verdict then defaults to `No`.
    #[serde(default)]
    pub flagged: bool,
}

/// Replay fixture line: `{"a", "b", "variant", "verdict", "raw"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentRecord {
    pub a: String,
    pub b: String,
    pub variant: VariantKind,
    pub verdict: Verdict,
    pub raw: String,
}

impl EdgeJudgment {
    pub fn to_record(&self, graph: &ConceptGraph) -> JudgmentRecord {
        let name = |id| graph.name(id).unwrap_or_default().to_string();
        JudgmentRecord {
            a: name(self.source),
            b: name(self.target),
            variant: self.variant,
            verdict: self.verdict,
            raw: self.raw_response.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    AllOrderedPairs,
    /// `sample_size` positives and `sample_size` negatives.
    BalancedSample {
        sample_size: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingPlan {
    pub mode: SamplingMode,
    pub seed: u64,
}

/// Chooses the ordered pairs to judge.
///
/// Balanced sampling draws positives from the positive labels. Negatives
/// come from the annotated negatives when any exist, otherwise from every
/// ordered pair that is not a positive. The result is sorted.
pub fn sample_pairs(
    concepts: &[ConceptId],
    labels: Option<&[LabeledPair]>,
    plan: &SamplingPlan,
) -> Result<Vec<(ConceptId, ConceptId)>, RecoveryError> {
    match plan.mode {
        SamplingMode::AllOrderedPairs => Ok(concepts
            .iter()
            .flat_map(|&a| concepts.iter().filter(move |&&b| b != a).map(move |&b| (a, b)))
            .collect()),
        SamplingMode::BalancedSample { sample_size } => {
            let labels = labels.ok_or(RecoveryError::MissingLabels)?;
            let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
            let positives: BTreeSet<(ConceptId, ConceptId)> = labels
                .iter()
                .filter(|l| l.is_positive())
                .map(|l| (l.source, l.target))
                .collect();
            let annotated_neg: BTreeSet<(ConceptId, ConceptId)> = labels
                .iter()
                .filter(|l| !l.is_positive())
                .map(|l| (l.source, l.target))
                .collect();
            let neg_pool: Vec<_> = if annotated_neg.is_empty() {
                concepts
                    .iter()
                    .flat_map(|&a| concepts.iter().map(move |&b| (a, b)))
                    .filter(|&(a, b)| a != b && !positives.contains(&(a, b)))
                    .collect()
            } else {
                annotated_neg.into_iter().collect()
            };
            let pos_pool: Vec<_> = positives.into_iter().collect();
            if pos_pool.len() < sample_size {
                return Err(RecoveryError::InsufficientPositives {
                    requested: sample_size,
                    available: pos_pool.len(),
                });
            }
            if neg_pool.len() < sample_size {
                return Err(RecoveryError::InsufficientNegatives {
                    requested: sample_size,
                    available: neg_pool.len(),
                });
            }
            let mut out: Vec<_> = pos_pool
                .choose_multiple(&mut rng, sample_size)
                .chain(neg_pool.choose_multiple(&mut rng, sample_size))
                .copied()
                .collect();
            out.sort();
            Ok(out)
        }
    }
}

#[derive(Debug, Clone)]
pub struct RecoveryConfig {
    /// Domain phrase substituted into the prompt, e.g. "natural language processing".
    pub domain: String,
    pub variant: PromptVariant,
    /// Maximum concurrent oracle calls.
    pub in_flight: usize,
}

impl RecoveryConfig {
    pub fn new(domain: impl Into<String>, variant: PromptVariant) -> Self {
        Self {
            domain: domain.into(),
            variant,
            in_flight: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RecoveredGraph {
    pub graph: ConceptGraph,
    /// One judgment per sampled pair, in pair order.
    pub judgments: Vec<EdgeJudgment>,
}

/// Asks the oracle about one ordered pair, retrying once with
/// [`RETRY_SUFFIX`] when the answer has no verdict.
pub fn judge_pair(
    concepts: &ConceptGraph,
    oracle: &dyn Oracle,
    config: &RecoveryConfig,
    ctx: &RecoveryContext<'_>,
    (source, target): (ConceptId, ConceptId),
) -> Result<EdgeJudgment, RecoveryError> {
    let a = concepts.name(source).ok_or(GraphError::UnknownConcept(source))?;
    let b = concepts.name(target).ok_or(GraphError::UnknownConcept(target))?;
    let info = build_additional_info(config.variant, a, b, ctx)?;
    let prompt = render_prompt(config.variant, &config.domain, a, b, &info)?;
    let ask = |p: &str| {
        oracle.complete(p).map_err(|source| RecoveryError::Oracle {
            a: a.to_string(),
            b: b.to_string(),
            source,
        })
    };
    let mut raw = ask(&prompt)?;
    let mut flagged = false;
    let verdict = match parse_verdict(&raw) {
        Ok(v) => v,
        Err(_) => {
            raw = ask(&format!("{prompt}\n{RETRY_SUFFIX}"))?;
            parse_verdict(&raw).unwrap_or_else(|_| {
                warn!(a, b, "unparseable verdict after retry, recording NO");
                flagged = true;
                Verdict::No
            })
        }
    };
    Ok(EdgeJudgment {
        source,
        target,
        verdict,
        variant: config.variant.kind(),
        raw_response: raw,
        prompt_text: prompt,
        flagged,
    })
}

/// Judges every sampled pair and assembles the graph of `Yes` verdicts.
///
/// Oracle calls run on a pool of `config.in_flight` threads; assembly folds
/// the judgments in pair order, so the output does not depend on which call
/// finishes first. On failure the error of the first failing pair (in pair
/// order) is returned.
pub fn recover_graph(
    concepts: &ConceptGraph,
    oracle: &dyn Oracle,
    config: &RecoveryConfig,
    plan: &SamplingPlan,
    labels: Option<&[LabeledPair]>,
    ctx: &RecoveryContext<'_>,
) -> Result<RecoveredGraph, RecoveryError> {
    let ids = concepts.ids();
    let pairs = sample_pairs(&ids, labels, plan)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.in_flight.max(1))
        .build()
        .expect("thread pool");
    let results: Vec<Result<EdgeJudgment, RecoveryError>> = pool.install(|| {
        pairs
            .par_iter()
            .map(|&pair| judge_pair(concepts, oracle, config, ctx, pair))
            .collect()
    });
    let judgments = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let graph = assemble(concepts, &judgments)?;
    Ok(RecoveredGraph { graph, judgments })
}

/// Graph over `concepts` with an edge for every `Yes` judgment.
pub fn assemble(concepts: &ConceptGraph, judgments: &[EdgeJudgment]) -> Result<ConceptGraph, GraphError> {
    let mut ordered: Vec<&EdgeJudgment> = judgments.iter().collect();
    ordered.sort_by_key(|j| (j.source, j.target));
    ConceptGraph::from_parts(
        concepts.concepts().cloned(),
        ordered
            .into_iter()
            .filter(|j| j.verdict.is_yes())
            .map(|j| (j.source, j.target)),
    )
}
