use std::collections::BTreeMap;
use std::path::PathBuf;

use cgraph::eval::{
    binary_report, confusion_counts, similarity_f1, Embedder, EvalError, EvalReport, ListReport, ReportMeta,
    SimilarityMatcher, SimilarityScore, DEFAULT_MU,
};
use cgraph::graph::ConceptGraph;
use cgraph::pipeline::{split_concepts, TutorQaItem};
use cgraph::recovery::{parse_verdict, JudgmentRecord, Verdict};
use cgraph::text::normalize_name;
use clap::{Args, ValueEnum};
use serde::Serialize;

use super::{build_embedder, concept_graph, domain, load_concepts, load_jsonl, load_pairs, to_json, AnswerLine};
use crate::error::CliError;
use crate::manifest::Session;
use crate::settings::Settings;
use crate::specs::EmbedderSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    /// Yes/No judgments against labeled pairs.
    Binary,
    /// QA answers against TutorQA gold items.
    List,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    /// Judgment JSONL (binary) or answer JSONL from `qa` (list).
    #[arg(long)]
    pub predictions: PathBuf,
    /// Labeled pair TSV (binary) or TutorQA JSONL (list), aligned line by line.
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// Concept TSV; when given, binary gold pairs must name the judged pairs.
    #[arg(long)]
    pub concepts: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = EvalMode::Binary)]
    pub mode: EvalMode,
    /// exact, hash[:DIM], trigram, store:PATH or live.
    #[arg(long, default_value = "exact")]
    pub embedder: EmbedderSpec,
    /// Cosine threshold for concept matches.
    #[arg(long, default_value_t = DEFAULT_MU)]
    pub mu: f64,
    /// Match list concepts through a one-to-one assignment.
    #[arg(long)]
    pub one_to_one: bool,
    /// Dataset label carried into the report.
    #[arg(long)]
    pub dataset: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
struct BinaryOutput {
    mode: EvalMode,
    #[serde(flatten)]
    meta: ReportMeta,
    items: usize,
    yes_count: usize,
    no_count: usize,
    #[serde(flatten)]
    metrics: Option<EvalReport>,
}

/// Scores of QA answers, grouped by task.
#[derive(Debug, Clone, Serialize)]
pub struct QaScores {
    #[serde(flatten)]
    pub meta: ReportMeta,
    pub items: usize,
    /// Task 1 Yes/No metrics.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub task1: Option<EvalReport>,
    /// Task 1 answers without a Yes/No, scored as No.
    pub task1_unparsed: usize,
    /// Mean similarity scores per list task ("2", "3", "4").
    pub lists: BTreeMap<String, ListReport>,
    /// Items left unscored: Task 5, or no gold answer.
    pub unscored: usize,
}

impl QaScores {
    pub fn is_empty(&self) -> bool {
        self.task1.is_none() && self.lists.is_empty()
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        if let Some(r) = &self.task1 {
            out.push_str("task 1\n");
            out.push_str(&r.table(&self.meta));
            out.push('\n');
        }
        for (task, r) in &self.lists {
            out.push_str(&format!("task {task}\n"));
            out.push_str(&r.table(&self.meta));
            out.push('\n');
        }
        out
    }
}

fn answer_verdict(answer: &str) -> Option<Verdict> {
    parse_verdict(answer).ok()
}

/// Scores `(task, answer)` pairs against gold items of the same index.
pub fn score_answers(
    answers: &[(u8, String)],
    gold: &[TutorQaItem],
    embedder: &dyn Embedder,
    mu: f64,
    one_to_one: bool,
    meta: ReportMeta,
) -> Result<QaScores, CliError> {
    if answers.len() != gold.len() {
        return Err(EvalError::LengthMismatch {
            predictions: answers.len(),
            gold: gold.len(),
        }
        .into());
    }
    let mut matcher = SimilarityMatcher::new(embedder, mu)?;
    matcher.one_to_one = one_to_one;
    let (mut pred1, mut gold1) = (Vec::new(), Vec::new());
    let mut unparsed = 0;
    let mut unscored = 0;
    let mut lists: BTreeMap<u8, Vec<SimilarityScore>> = BTreeMap::new();
    for (i, ((task, answer), item)) in answers.iter().zip(gold).enumerate() {
        if *task != item.task {
            return Err(CliError::Data(format!(
                "item {}: answer is for task {task} but gold is task {}",
                i + 1,
                item.task
            )));
        }
        match item.task {
            1 => match item.gold_verdict() {
                Some(g) => {
                    let p = answer_verdict(answer).unwrap_or_else(|| {
                        unparsed += 1;
                        Verdict::No
                    });
                    pred1.push(p);
                    gold1.push(g);
                }
                None => unscored += 1,
            },
            2..=4 => {
                let relevant = item.gold_concepts();
                if relevant.iter().all(|r| normalize_name(r).is_empty()) {
                    unscored += 1;
                    continue;
                }
                let predicted = split_concepts(answer);
                let score = match similarity_f1(&predicted, &relevant, &matcher) {
                    Ok(s) => s,
                    Err(EvalError::EmptyList("predicted")) => SimilarityScore {
                        precision: 0.0,
                        recall: 0.0,
                        s_f1: 0.0,
                    },
                    Err(e) => return Err(e.into()),
                };
                lists.entry(item.task).or_default().push(score);
            }
            _ => unscored += 1,
        }
    }
    let task1 = if pred1.is_empty() {
        None
    } else {
        Some(binary_report(&pred1, &gold1)?)
    };
    Ok(QaScores {
        meta,
        items: answers.len(),
        task1,
        task1_unparsed: unparsed,
        lists: lists
            .into_iter()
            .map(|(t, s)| (t.to_string(), ListReport::mean(&s)))
            .collect(),
        unscored,
    })
}

fn common_variant(records: &[JudgmentRecord]) -> Option<String> {
    let first = records.first()?.variant;
    records
        .iter()
        .all(|r| r.variant == first)
        .then(|| first.as_str().to_string())
}

fn eval_binary(args: &EvalArgs, settings: &Settings, session: &mut Session) -> Result<(), CliError> {
    let records: Vec<JudgmentRecord> = load_jsonl(session, &args.predictions)?;
    if records.is_empty() {
        return Err(CliError::data(args.predictions.display(), "no judgments"));
    }
    let verdicts: Vec<Verdict> = records.iter().map(|r| r.verdict).collect();
    let (yes_count, no_count) = confusion_counts(&verdicts);
    let meta = ReportMeta {
        variant: common_variant(&records),
        mu: None,
        dataset: args.dataset.clone(),
    };

    let metrics = match &args.gold {
        None => None,
        Some(gold_path) => {
            let gold = load_pairs(session, gold_path)?;
            if gold.len() != records.len() {
                return Err(CliError::Data(format!(
                    "{} has {} judgments but {} has {} labeled pairs",
                    args.predictions.display(),
                    records.len(),
                    gold_path.display(),
                    gold.len()
                )));
            }
            let graph: Option<ConceptGraph> = match &args.concepts {
                Some(p) => {
                    let concepts = load_concepts(session, p, &domain(None, settings))?;
                    Some(concept_graph(concepts, &[], p)?)
                }
                None => None,
            };
            let mut labels = Vec::with_capacity(gold.len());
            for (i, (pair, record)) in gold.iter().zip(&records).enumerate() {
                let line = i + 1;
                let label = pair
                    .label
                    .ok_or_else(|| CliError::Data(format!("{} line {line}: missing 0/1 label", gold_path.display())))?;
                if let Some(g) = &graph {
                    let name = |id| g.name(id).map(normalize_name);
                    let (a, b) = (name(pair.source), name(pair.target));
                    if a.as_deref() != Some(&normalize_name(&record.a))
                        || b.as_deref() != Some(&normalize_name(&record.b))
                    {
                        return Err(CliError::Data(format!(
                            "line {line}: judged pair ({:?}, {:?}) does not match gold pair ({}, {})",
                            record.a, record.b, pair.source, pair.target
                        )));
                    }
                }
                labels.push(Verdict::from_bool(label));
            }
            Some(binary_report(&verdicts, &labels)?)
        }
    };

    let output = BinaryOutput {
        mode: EvalMode::Binary,
        meta: meta.clone(),
        items: records.len(),
        yes_count,
        no_count,
        metrics,
    };
    let mut table = match &metrics {
        Some(r) => r.table(&meta),
        None => String::new(),
    };
    table.push_str(&format!("yes {yes_count}  no {no_count}  items {}\n", records.len()));
    print!("{table}");
    session.write_json("report.json", &output)?;
    session.write("report.txt", table.as_bytes())
}

fn eval_list(args: &EvalArgs, settings: &Settings, session: &mut Session) -> Result<(), CliError> {
    let gold_path = args
        .gold
        .as_ref()
        .ok_or_else(|| CliError::Config("list evaluation needs --gold TutorQA JSONL".into()))?;
    let answers: Vec<AnswerLine> = load_jsonl(session, &args.predictions)?;
    let gold: Vec<TutorQaItem> = load_jsonl(session, gold_path)?;
    let embedder = build_embedder(&args.embedder, settings, session)?;
    let pairs: Vec<(u8, String)> = answers.iter().map(|a| (a.task, a.answer.clone())).collect();
    let meta = ReportMeta {
        variant: None,
        mu: Some(args.mu),
        dataset: args.dataset.clone(),
    };
    let scores = score_answers(&pairs, &gold, embedder.as_ref(), args.mu, args.one_to_one, meta)?;
    let table = scores.table();
    print!("{table}");
    session.write_json("report.json", &scores)?;
    session.write("report.txt", table.as_bytes())
}

pub fn eval(args: &EvalArgs, settings: &Settings, session: &mut Session) -> Result<serde_json::Value, CliError> {
    match args.mode {
        EvalMode::Binary => eval_binary(args, settings, session)?,
        EvalMode::List => eval_list(args, settings, session)?,
    }
    Ok(serde_json::json!({ "args": to_json(args) }))
}
