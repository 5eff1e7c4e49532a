use std::collections::BTreeMap;
use std::path::PathBuf;

use cgraph::llm::PromptRecord;
use cgraph::pipeline::PipelineTrace;
use cgraph::recovery::{JudgmentRecord, VariantKind};
use cgraph::text::normalize_name;
use clap::Args;
use serde::Serialize;

use super::{load_jsonl, to_json, JudgmentLine};
use crate::error::CliError;
use crate::manifest::Session;

#[derive(Debug, Clone, Args, Serialize)]
pub struct FixturesArgs {
    /// Judgment JSONL from `recover`; repeatable, later files win.
    #[arg(long)]
    pub judgments: Vec<PathBuf>,
    /// Trace JSONL from `qa --trace`; repeatable, later files win.
    #[arg(long)]
    pub traces: Vec<PathBuf>,
}

/// Writes `fixtures.jsonl` (judgments keyed by pair and variant) and
/// `prompts.jsonl` (exact prompt/response pairs), both sorted by key.
pub fn fixtures(args: &FixturesArgs, session: &mut Session) -> Result<serde_json::Value, CliError> {
    if args.judgments.is_empty() && args.traces.is_empty() {
        return Err(CliError::Config(
            "give at least one --judgments or --traces file".into(),
        ));
    }
    let mut judgments: BTreeMap<(String, String, VariantKind), JudgmentRecord> = BTreeMap::new();
    let mut prompts: BTreeMap<String, String> = BTreeMap::new();
    for path in &args.judgments {
        for line in load_jsonl::<JudgmentLine>(session, path)? {
            if !line.prompt.is_empty() {
                prompts.insert(line.prompt.clone(), line.record.raw.clone());
            }
            let r = line.record;
            judgments.insert((normalize_name(&r.a), normalize_name(&r.b), r.variant), r);
        }
    }
    for path in &args.traces {
        for trace in load_jsonl::<PipelineTrace>(session, path)? {
            for ex in trace.exchanges {
                prompts.insert(ex.prompt, ex.response);
            }
        }
    }
    let fixture_lines: Vec<JudgmentRecord> = judgments.into_values().collect();
    let prompt_lines: Vec<PromptRecord> = prompts
        .into_iter()
        .map(|(prompt, response)| PromptRecord { prompt, response })
        .collect();
    if !fixture_lines.is_empty() {
        session.write_jsonl("fixtures.jsonl", &fixture_lines)?;
    }
    session.write_jsonl("prompts.jsonl", &prompt_lines)?;
    println!(
        "{} judgment fixtures, {} prompt fixtures",
        fixture_lines.len(),
        prompt_lines.len()
    );
    Ok(serde_json::json!({ "args": to_json(args) }))
}
