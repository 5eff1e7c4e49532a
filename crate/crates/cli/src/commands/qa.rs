use std::path::{Path, PathBuf};

use cgraph::eval::{concept_mentions, MentionCounts, ReportMeta, DEFAULT_MU};
use cgraph::llm::{ChatClient, MockOracle, Oracle, PromptReplayOracle};
use cgraph::pipeline::{
    FollowingAnswerOracle, GarbageOracle, Pipeline, PipelineError, PipelineTrace, TemplateCommandOracle, TutorQaItem,
};
use clap::Args;
use serde::{Deserialize, Serialize};

use super::eval::score_answers;
use super::{build_embedder, concept_graph, domain, in_file, load_concepts, load_jsonl, load_pairs, to_json};
use crate::error::CliError;
use crate::manifest::Session;
use crate::settings::{live_endpoint, Settings};
use crate::specs::{AnswerSpec, CommandSpec, EmbedderSpec};

#[derive(Debug, Clone, Args, Serialize)]
pub struct QaArgs {
    /// Concept TSV: id<TAB>name.
    #[arg(long)]
    pub concepts: PathBuf,
    /// Edge TSV over the concept ids.
    #[arg(long)]
    pub edges: PathBuf,
    /// TutorQA JSONL: {"task", "question", "answer"}.
    #[arg(long)]
    pub items: PathBuf,
    /// template, garbage, replay:PROMPTS.jsonl or live.
    #[arg(long, default_value = "template")]
    pub command_oracle: CommandSpec,
    /// following, replay:PROMPTS.jsonl, echo or live.
    #[arg(long, default_value = "following")]
    pub answer_oracle: AnswerSpec,
    /// Also write traces.jsonl with every prompt, query and outcome.
    #[arg(long)]
    pub trace: bool,
    /// Embedder for scoring list answers.
    #[arg(long, default_value = "exact")]
    pub embedder: EmbedderSpec,
    #[arg(long, default_value_t = DEFAULT_MU)]
    pub mu: f64,
    #[arg(long)]
    pub one_to_one: bool,
    #[arg(long)]
    pub domain: Option<String>,
    #[arg(long)]
    pub prereq_depth: Option<u32>,
    #[arg(long)]
    pub expansion_hops: Option<u32>,
    #[arg(long)]
    pub proposal_hops: Option<u32>,
    /// Dataset label carried into the report.
    #[arg(long)]
    pub dataset: Option<String>,
}

/// One line of `answers.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerLine {
    pub task: u8,
    pub question: String,
    pub answer: String,
    #[serde(default)]
    pub fallback_used: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
struct MentionLine {
    item: usize,
    question: String,
    #[serde(flatten)]
    counts: MentionCounts,
}

#[derive(Debug, Clone, Serialize)]
struct MentionReport {
    items: usize,
    mean_unique: f64,
    mean_total: f64,
    per_item: Vec<MentionLine>,
}

fn replay(session: &mut Session, path: &Path) -> Result<PromptReplayOracle, CliError> {
    let bytes = session.read(path)?;
    PromptReplayOracle::from_jsonl(&bytes[..]).map_err(|e| in_file(path, e))
}

pub fn qa(args: &QaArgs, settings: &Settings, session: &mut Session) -> Result<serde_json::Value, CliError> {
    let domain = domain(args.domain.as_ref(), settings);
    let concepts = load_concepts(session, &args.concepts, &domain)?;
    let edges = load_pairs(session, &args.edges)?;
    let graph = concept_graph(concepts, &edges, &args.edges)?;
    let items: Vec<TutorQaItem> = load_jsonl(session, &args.items)?;
    if items.is_empty() {
        return Err(in_file(&args.items, "no items"));
    }
    for (i, item) in items.iter().enumerate() {
        item.validate()
            .map_err(|e| in_file(&args.items, format!("item {}: {e}", i + 1)))?;
    }

    let mut config = settings.pipeline.clone();
    config.prereq_depth = args.prereq_depth.unwrap_or(config.prereq_depth);
    config.expansion_hops = args.expansion_hops.unwrap_or(config.expansion_hops);
    config.proposal_hops = args.proposal_hops.unwrap_or(config.proposal_hops);
    if config.prereq_depth == 0 || config.expansion_hops == 0 || config.proposal_hops == 0 {
        return Err(CliError::Config("depth and hop limits must be positive".into()));
    }
    let pipeline = Pipeline::new(&graph, config.clone());

    let command: Box<dyn Oracle> = match &args.command_oracle {
        CommandSpec::Template => Box::new(TemplateCommandOracle::with_limits(
            pipeline.vocabulary().to_vec(),
            config.prereq_depth,
            config.expansion_hops,
        )),
        CommandSpec::Garbage => Box::new(GarbageOracle),
        CommandSpec::Replay(p) => Box::new(replay(session, p)?),
        CommandSpec::Live => {
            let section = settings.command_oracle.as_ref().or(settings.oracle.as_ref());
            Box::new(ChatClient::new(live_endpoint(section, "command_oracle")?))
        }
    };
    let answer: Box<dyn Oracle> = match &args.answer_oracle {
        AnswerSpec::Following => Box::new(FollowingAnswerOracle),
        AnswerSpec::Replay(p) => Box::new(replay(session, p)?),
        AnswerSpec::Echo => Box::new(MockOracle::Echo),
        AnswerSpec::Live => Box::new(ChatClient::new(live_endpoint(settings.oracle.as_ref(), "oracle")?)),
    };

    let results = pipeline.run_batch(&items, command.as_ref(), answer.as_ref());
    let mut lines = Vec::with_capacity(items.len());
    let mut traces: Vec<PipelineTrace> = Vec::new();
    for (i, (item, result)) in items.iter().zip(results).enumerate() {
        match result {
            Ok((answer, trace)) => {
                lines.push(AnswerLine {
                    task: item.task,
                    question: item.question.clone(),
                    answer,
                    fallback_used: trace.fallback_used,
                    error: None,
                });
                traces.push(trace);
            }
            Err(e @ PipelineError::Oracle(_)) => {
                return Err(CliError::Oracle(format!("item {}: {e}", i + 1)));
            }
            Err(e) => lines.push(AnswerLine {
                task: item.task,
                question: item.question.clone(),
                answer: String::new(),
                fallback_used: false,
                error: Some(e.to_string()),
            }),
        }
    }
    session.write_jsonl("answers.jsonl", &lines)?;
    if args.trace {
        session.write_jsonl("traces.jsonl", &traces)?;
    }

    let scored: Vec<usize> = (0..items.len()).filter(|&i| items[i].task != 5).collect();
    if !scored.is_empty() {
        let embedder = build_embedder(&args.embedder, settings, session)?;
        let answers: Vec<(u8, String)> = scored
            .iter()
            .map(|&i| (lines[i].task, lines[i].answer.clone()))
            .collect();
        let gold: Vec<TutorQaItem> = scored.iter().map(|&i| items[i].clone()).collect();
        let meta = ReportMeta {
            variant: None,
            mu: Some(args.mu),
            dataset: args.dataset.clone(),
        };
        let scores = score_answers(&answers, &gold, embedder.as_ref(), args.mu, args.one_to_one, meta)?;
        if !scores.is_empty() {
            let table = scores.table();
            print!("{table}");
            session.write_json("report.json", &scores)?;
            session.write("report.txt", table.as_bytes())?;
        }
    }

    let proposals: Vec<usize> = (0..items.len()).filter(|&i| items[i].task == 5).collect();
    if !proposals.is_empty() {
        let per_item: Vec<MentionLine> = proposals
            .iter()
            .map(|&i| MentionLine {
                item: i + 1,
                question: items[i].question.clone(),
                counts: concept_mentions(&lines[i].answer, pipeline.vocabulary()),
            })
            .collect();
        let n = per_item.len() as f64;
        let report = MentionReport {
            items: per_item.len(),
            mean_unique: per_item.iter().map(|m| m.counts.unique_count as f64).sum::<f64>() / n,
            mean_total: per_item.iter().map(|m| m.counts.total_count as f64).sum::<f64>() / n,
            per_item,
        };
        println!(
            "task 5: {} proposals, mean {:.2} distinct concepts mentioned",
            report.items, report.mean_unique
        );
        session.write_json("mentions.json", &report)?;
    }

    let failed = lines.iter().filter(|l| l.error.is_some()).count();
    let fallbacks = lines.iter().filter(|l| l.fallback_used).count();
    println!(
        "answered {} items ({failed} failed, {fallbacks} via fallback)",
        lines.len()
    );
    Ok(serde_json::json!({
        "args": to_json(args),
        "domain": domain,
        "pipeline": to_json(&config),
    }))
}
