//! Evaluation metrics: binary accuracy/F1, similarity-based F1 for concept
//! lists, verdict tallies and concept-mention counting.

mod embed;
mod report;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::recovery::{EdgeJudgment, Verdict};
use crate::text::{normalize_name, MentionScanner};

pub use embed::{cosine, EmbedError, Embedder, ExactMatchEmbedder, HashEmbedder, StoreEmbedder, TrigramEmbedder};
pub use report::{ListReport, ReportMeta};

/// Default similarity threshold for concept matching.
pub const DEFAULT_MU: f64 = 0.6;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("predictions ({predictions}) and gold ({gold}) differ in length")]
    LengthMismatch { predictions: usize, gold: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("{0} concept list is empty after deduplication")]
    EmptyList(&'static str),
    #[error("embedder failed: {0}")]
    EmbedderFailure(#[from] EmbedError),
    #[error("threshold must be in (0, 1], got {0}")]
    BadThreshold(f64),
}

/// Confusion counts and derived metrics; `Yes` is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean with the 0/0 -> 0 convention.
pub fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

impl EvalReport {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        Self {
            accuracy: ratio(tp + tn, tp + fp + tn + fn_),
            precision,
            recall,
            f1: harmonic(precision, recall),
            tp,
            fp,
            tn,
            fn_,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn binary_report(predictions: &[Verdict], gold: &[Verdict]) -> Result<EvalReport, EvalError> {
    if predictions.len() != gold.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            gold: gold.len(),
        });
    }
    if predictions.is_empty() {
        return Err(EvalError::Empty);
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (p, g) in predictions.iter().zip(gold) {
        match (p, g) {
            (Verdict::Yes, Verdict::Yes) => tp += 1,
            (Verdict::Yes, Verdict::No) => fp += 1,
            (Verdict::No, Verdict::No) => tn += 1,
            (Verdict::No, Verdict::Yes) => fn_ += 1,
        }
    }
    Ok(EvalReport::from_counts(tp, fp, tn, fn_))
}

/// Embedder plus the match threshold for one evaluation run.
pub struct SimilarityMatcher<'a> {
    pub embedder: &'a dyn Embedder,
    pub threshold: f64,
    /// Count matches through a maximum one-to-one assignment instead of
    /// letting several predictions match the same relevant concept.
    pub one_to_one: bool,
}

impl<'a> SimilarityMatcher<'a> {
    pub fn new(embedder: &'a dyn Embedder, threshold: f64) -> Result<Self, EvalError> {
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(EvalError::BadThreshold(threshold));
        }
        Ok(Self {
            embedder,
            threshold,
            one_to_one: false,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityScore {
    pub precision: f64,
    pub recall: f64,
    pub s_f1: f64,
}

fn dedup_normalized<S: AsRef<str>>(items: &[S]) -> Vec<String> {
    let mut seen = std::collections::BTreeSet::new();
    items
        .iter()
        .map(|s| normalize_name(s.as_ref()))
        .filter(|s| !s.is_empty() && seen.insert(s.clone()))
        .collect()
}

/// Size of a maximum bipartite matching over `adj[left] = rights`.
fn max_matching(adj: &[Vec<usize>], n_right: usize) -> usize {
    fn augment(u: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                if owner[v].is_none_or(|w| augment(w, adj, seen, owner)) {
                    owner[v] = Some(u);
                    return true;
                }
            }
        }
        false
    }
    let mut owner = vec![None; n_right];
    (0..adj.len())
        .filter(|&u| augment(u, adj, &mut vec![false; n_right], &mut owner))
        .count()
}

/// Similarity-based precision, recall and F1.
///
/// Lists are deduplicated by normalized name. A predicted concept counts
/// for precision when some relevant concept has cosine similarity strictly
/// above the threshold; symmetrically for recall.
pub fn similarity_f1<S: AsRef<str>, T: AsRef<str>>(
    predicted: &[S],
    relevant: &[T],
    matcher: &SimilarityMatcher<'_>,
) -> Result<SimilarityScore, EvalError> {
    let pred = dedup_normalized(predicted);
    let rel = dedup_normalized(relevant);
    if pred.is_empty() {
        return Err(EvalError::EmptyList("predicted"));
    }
    if rel.is_empty() {
        return Err(EvalError::EmptyList("relevant"));
    }
    let embed = |xs: &[String]| {
        xs.iter()
            .map(|x| matcher.embedder.embed(x))
            .collect::<Result<Vec<_>, _>>()
    };
    let (ep, er) = (embed(&pred)?, embed(&rel)?);
    let matches: Vec<Vec<usize>> = ep
        .iter()
        .map(|m| {
            er.iter()
                .enumerate()
                .filter(|(_, n)| cosine(m, n) > matcher.threshold)
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    let (hit_pred, hit_rel) = if matcher.one_to_one {
        let m = max_matching(&matches, rel.len());
        (m, m)
    } else {
        let mut rel_hit = vec![false; rel.len()];
        for js in &matches {
            for &j in js {
                rel_hit[j] = true;
            }
        }
        (
            matches.iter().filter(|js| !js.is_empty()).count(),
            rel_hit.iter().filter(|&&h| h).count(),
        )
    };
    let precision = ratio(hit_pred, pred.len());
    let recall = ratio(hit_rel, rel.len());
    Ok(SimilarityScore {
        precision,
        recall,
        s_f1: harmonic(precision, recall),
    })
}

/// `(yes_count, no_count)` over the judgments.
pub fn confusion_counts<'a>(verdicts: impl IntoIterator<Item = &'a Verdict>) -> (usize, usize) {
    verdicts.into_iter().fold((0, 0), |(y, n), v| match v {
        Verdict::Yes => (y + 1, n),
        Verdict::No => (y, n + 1),
    })
}

pub fn judgment_counts(judgments: &[EdgeJudgment]) -> (usize, usize) {
    confusion_counts(judgments.iter().map(|j| &j.verdict))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionCounts {
    pub unique_count: usize,
    pub total_count: usize,
    /// Concepts mentioned at least once, by vocabulary spelling.
    pub per_concept: BTreeMap<String, usize>,
}

/// Counts non-overlapping, longest-match vocabulary mentions in `text`.
pub fn concept_mentions<S: AsRef<str>>(text: &str, vocabulary: &[S]) -> MentionCounts {
    let scanner = MentionScanner::new(vocabulary);
    let mut per_concept: BTreeMap<String, usize> = BTreeMap::new();
    let hits = scanner.scan(text);
    for &i in &hits {
        *per_concept.entry(vocabulary[i].as_ref().to_string()).or_default() += 1;
    }
    MentionCounts {
        unique_count: per_concept.len(),
        total_count: hits.len(),
        per_concept,
    }
}
