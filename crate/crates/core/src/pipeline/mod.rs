//! Two-stage graph-grounded question answering over a concept graph.
//!
//! Stage one asks a command oracle for GQL-mini queries, parses and runs
//! them. When that fails a deterministic template built from the concepts
//! named in the question is tried once instead. Stage two renders the
//! returned paths into a grounding prompt for the answer oracle.

mod mocks;
mod prompts;

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ConceptGraph, ConceptId, Direction};
use crate::llm::{Oracle, OracleError, PromptRecord};
use crate::query::{execute, parse_script, print, GraphQuery, QueryOutcome};
use crate::recovery::{parse_verdict, Verdict};
use crate::text::{normalize_name, MentionScanner};

pub use mocks::{FollowingAnswerOracle, GarbageOracle, TemplateCommandOracle};
pub use prompts::{
    command_prompt, grounding_prompt, parse_command_prompt, parse_grounding_prompt, render_paths, ANSWER_RETRY_SUFFIX,
    EMPTY_PATH,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("oracle call failed: {0}")]
    Oracle(#[from] OracleError),
    #[error("command failed ({first}) and fallback failed ({second})")]
    FallbackExhausted { first: String, second: String },
    #[error("no Yes/No in answer {raw:?}")]
    UnparseableAnswer { raw: String },
    #[error("invalid item: {0}")]
    InvalidItem(String),
}

/// Gold answer: `"Yes"`/`"No"`, a concept list, or free text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TutorAnswer {
    List(Vec<String>),
    Text(String),
}

impl Default for TutorAnswer {
    fn default() -> Self {
        TutorAnswer::Text(String::new())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TutorQaItem {
    pub task: u8,
    pub question: String,
    #[serde(default)]
    pub answer: TutorAnswer,
}

/// Splits a `;`- or newline-separated concept list.
pub fn split_concepts(text: &str) -> Vec<String> {
    text.split([';', '\n'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn yes_no(text: &str) -> Option<Verdict> {
    match text.trim().to_ascii_lowercase().as_str() {
        "yes" => Some(Verdict::Yes),
        "no" => Some(Verdict::No),
        _ => None,
    }
}

impl TutorQaItem {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::InvalidItem(m));
        if !(1..=5).contains(&self.task) {
            return bad(format!("task must be 1-5, got {}", self.task));
        }
        if self.question.trim().is_empty() {
            return bad("empty question".into());
        }
        match (&self.answer, self.task) {
            (TutorAnswer::Text(t), 1) if yes_no(t).is_none() => {
                bad(format!("task 1 answer must be Yes or No, got {t:?}"))
            }
            (TutorAnswer::List(_), 1 | 5) => bad(format!("task {} answer must be text", self.task)),
            _ => Ok(()),
        }
    }

    pub fn gold_verdict(&self) -> Option<Verdict> {
        match &self.answer {
            TutorAnswer::Text(t) => yes_no(t),
            TutorAnswer::List(_) => None,
        }
    }

    pub fn gold_concepts(&self) -> Vec<String> {
        match &self.answer {
            TutorAnswer::List(l) => l.clone(),
            TutorAnswer::Text(t) => split_concepts(t),
        }
    }
}

/// Everything one item went through, enough to replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineTrace {
    pub task: u8,
    pub question: String,
    pub command_prompt: String,
    pub generated_command: String,
    /// Why the generated command was rejected, if it was.
    pub command_error: Option<String>,
    pub fallback_command: Option<String>,
    pub fallback_used: bool,
    /// Queries that produced `outcomes`, from whichever command succeeded.
    pub parsed_queries: Vec<GraphQuery>,
    pub outcomes: Vec<QueryOutcome>,
    pub grounding_prompt: String,
    pub raw_answer: String,
    pub final_answer: String,
    /// Every oracle exchange in call order.
    pub exchanges: Vec<PromptRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub prereq_depth: u32,
    /// Neighborhood radius for Task 4 concept expansion.
    pub expansion_hops: u32,
    /// Neighborhood radius for Task 5 context.
    pub proposal_hops: u32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            prereq_depth: 3,
            expansion_hops: 2,
            proposal_hops: 1,
        }
    }
}

fn scan_mentions(scanner: &MentionScanner, vocabulary: &[String], question: &str) -> Vec<String> {
    let mut seen = HashSet::new();
    scanner
        .scan(question)
        .into_iter()
        .filter(|&i| seen.insert(i))
        .map(|i| vocabulary[i].clone())
        .collect()
}

/// Vocabulary entries mentioned in `question`, longest match first, in
/// question order without repeats.
pub fn extract_concepts<S: AsRef<str>>(question: &str, vocabulary: &[S]) -> Vec<String> {
    let vocab: Vec<String> = vocabulary.iter().map(|s| s.as_ref().to_string()).collect();
    scan_mentions(&MentionScanner::new(&vocab), &vocab, question)
}

/// Deterministic queries for `task` over the extracted concepts, one per
/// line. `None` when there are too few concepts.
pub fn fallback_script(task: u8, concepts: &[String], prereq_depth: u32, hops: u32) -> Option<String> {
    let neighbors = |c: &String, direction, hops| GraphQuery::Neighbors {
        concept: c.clone(),
        direction,
        hops,
    };
    let queries: Vec<GraphQuery> = match task {
        1 | 3 if concepts.len() >= 2 => {
            let (from, to) = (concepts[0].clone(), concepts[1].clone());
            vec![if task == 1 {
                GraphQuery::Reachable { from, to }
            } else {
                GraphQuery::ShortestPath { from, to }
            }]
        }
        2 => concepts
            .iter()
            .map(|c| GraphQuery::Prerequisites {
                concept: c.clone(),
                depth: prereq_depth,
            })
            .collect(),
        4 => concepts.iter().map(|c| neighbors(c, Direction::In, hops)).collect(),
        5 => concepts
            .iter()
            .flat_map(|c| [neighbors(c, Direction::In, hops), neighbors(c, Direction::Out, hops)])
            .collect(),
        _ => Vec::new(),
    };
    if queries.is_empty() {
        None
    } else {
        Some(queries.iter().map(print).collect::<Vec<_>>().join("\n"))
    }
}

struct Recorder<'o> {
    oracle: &'o dyn Oracle,
    log: Vec<PromptRecord>,
}

impl Recorder<'_> {
    fn ask(&mut self, prompt: String) -> Result<String, OracleError> {
        let response = self.oracle.complete(&prompt)?;
        self.log.push(PromptRecord {
            prompt,
            response: response.clone(),
        });
        Ok(response)
    }
}

/// Result of the answer stage.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundedAnswer {
    pub prompt: String,
    pub raw: String,
    pub answer: String,
    pub exchanges: Vec<PromptRecord>,
}

fn distinct_paths(outcomes: &[QueryOutcome]) -> Vec<Vec<ConceptId>> {
    let mut seen = HashSet::new();
    outcomes
        .iter()
        .flat_map(QueryOutcome::paths)
        .filter(|p| seen.insert(p.clone()))
        .collect()
}

/// Renders the outcomes into the grounding prompt and asks `oracle`.
///
/// Task 1 answers are reduced to exactly `Yes` or `No`, re-asking once
/// with [`ANSWER_RETRY_SUFFIX`]; other tasks return the text verbatim.
pub fn ground_and_answer(
    graph: &ConceptGraph,
    task: u8,
    question: &str,
    outcomes: &[QueryOutcome],
    oracle: &dyn Oracle,
) -> Result<GroundedAnswer, PipelineError> {
    let prompt = grounding_prompt(task, question, &render_paths(graph, &distinct_paths(outcomes)));
    let mut rec = Recorder {
        oracle,
        log: Vec::new(),
    };
    let mut raw = rec.ask(prompt.clone())?;
    let answer = if task == 1 {
        let verdict = match parse_verdict(&raw) {
            Ok(v) => v,
            Err(_) => {
                raw = rec.ask(format!("{prompt}\n{ANSWER_RETRY_SUFFIX}"))?;
                parse_verdict(&raw).map_err(|_| PipelineError::UnparseableAnswer { raw: raw.clone() })?
            }
        };
        if verdict.is_yes() { "Yes" } else { "No" }.to_string()
    } else {
        raw.clone()
    };
    Ok(GroundedAnswer {
        prompt,
        raw,
        answer,
        exchanges: rec.log,
    })
}

/// Asks `oracle` for GQL-mini queries answering `question`. The text is
/// returned verbatim.
pub fn generate_command(question: &str, task: u8, oracle: &dyn Oracle) -> Result<String, OracleError> {
    oracle.complete(&command_prompt(task, question))
}

/// Runs items against one graph.
pub struct Pipeline<'g> {
    graph: &'g ConceptGraph,
    vocabulary: Vec<String>,
    scanner: MentionScanner,
    pub config: PipelineConfig,
}

impl<'g> Pipeline<'g> {
    pub fn new(graph: &'g ConceptGraph, config: PipelineConfig) -> Self {
        let vocabulary: Vec<String> = graph.concepts().map(|c| c.name.clone()).collect();
        let scanner = MentionScanner::new(&vocabulary);
        Self {
            graph,
            vocabulary,
            scanner,
            config,
        }
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn extract_concepts(&self, question: &str) -> Vec<String> {
        scan_mentions(&self.scanner, &self.vocabulary, question)
    }

    fn hops_for(&self, task: u8) -> u32 {
        if task == 5 {
            self.config.proposal_hops
        } else {
            self.config.expansion_hops
        }
    }

    fn attempt(&self, script: &str) -> Result<(Vec<GraphQuery>, Vec<QueryOutcome>), String> {
        let queries = parse_script(script).map_err(|e| e.to_string())?;
        let outcomes = queries
            .iter()
            .map(|q| execute(q, self.graph).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        Ok((queries, outcomes))
    }

    /// Runs one item end to end. Task 5 skips command generation and uses
    /// the neighborhoods of the named concepts as context.
    pub fn run_task(
        &self,
        item: &TutorQaItem,
        command_oracle: &dyn Oracle,
        answer_oracle: &dyn Oracle,
    ) -> Result<(String, PipelineTrace), PipelineError> {
        if !(1..=5).contains(&item.task) {
            return Err(PipelineError::InvalidItem(format!(
                "task must be 1-5, got {}",
                item.task
            )));
        }
        if item.task == 5 {
            return self.run_task_5(item, answer_oracle);
        }
        let mut rec = Recorder {
            oracle: command_oracle,
            log: Vec::new(),
        };
        let cmd_prompt = command_prompt(item.task, &item.question);
        let generated = rec.ask(cmd_prompt.clone())?;
        let mut exchanges = rec.log;

        let mut command_error = None;
        let mut fallback_command = None;
        let (parsed_queries, outcomes) = match self.attempt(&generated) {
            Ok(r) => r,
            Err(first) => {
                command_error = Some(first.clone());
                let concepts = self.extract_concepts(&item.question);
                let script = fallback_script(item.task, &concepts, self.config.prereq_depth, self.hops_for(item.task))
                    .ok_or_else(|| PipelineError::FallbackExhausted {
                        first: first.clone(),
                        second: format!("too few known concepts in question ({})", concepts.len()),
                    })?;
                fallback_command = Some(script.clone());
                self.attempt(&script)
                    .map_err(|second| PipelineError::FallbackExhausted { first, second })?
            }
        };
        let grounded = ground_and_answer(self.graph, item.task, &item.question, &outcomes, answer_oracle)?;
        exchanges.extend(grounded.exchanges);
        let trace = PipelineTrace {
            task: item.task,
            question: item.question.clone(),
            command_prompt: cmd_prompt,
            generated_command: generated,
            command_error,
            fallback_used: fallback_command.is_some(),
            fallback_command,
            parsed_queries,
            outcomes,
            grounding_prompt: grounded.prompt,
            raw_answer: grounded.raw,
            final_answer: grounded.answer.clone(),
            exchanges,
        };
        Ok((grounded.answer, trace))
    }

    /// Project proposal from the named concepts and their neighborhoods.
    pub fn run_task_5(
        &self,
        item: &TutorQaItem,
        answer_oracle: &dyn Oracle,
    ) -> Result<(String, PipelineTrace), PipelineError> {
        let concepts = self.extract_concepts(&item.question);
        let script =
            fallback_script(5, &concepts, self.config.prereq_depth, self.config.proposal_hops).unwrap_or_default();
        let (parsed_queries, outcomes) = if script.is_empty() {
            (Vec::new(), Vec::new())
        } else {
            self.attempt(&script).map_err(|e| PipelineError::FallbackExhausted {
                first: e,
                second: "context queries are generated from known concepts".into(),
            })?
        };
        let grounded = ground_and_answer(self.graph, 5, &item.question, &outcomes, answer_oracle)?;
        let trace = PipelineTrace {
            task: 5,
            question: item.question.clone(),
            command_prompt: String::new(),
            generated_command: script,
            command_error: None,
            fallback_command: None,
            fallback_used: false,
            parsed_queries,
            outcomes,
            grounding_prompt: grounded.prompt,
            raw_answer: grounded.raw,
            final_answer: grounded.answer.clone(),
            exchanges: grounded.exchanges,
        };
        Ok((grounded.answer, trace))
    }

    /// Runs items in parallel; results keep item order.
    pub fn run_batch(
        &self,
        items: &[TutorQaItem],
        command_oracle: &dyn Oracle,
        answer_oracle: &dyn Oracle,
    ) -> Vec<Result<(String, PipelineTrace), PipelineError>> {
        items
            .par_iter()
            .map(|item| self.run_task(item, command_oracle, answer_oracle))
            .collect()
    }
}

/// Normalized concept names, deduplicated, for comparing list answers.
pub fn normalized_set(items: &[String]) -> Vec<String> {
    let mut seen = HashSet::new();
    items
        .iter()
        .map(|s| normalize_name(s))
        .filter(|s| seen.insert(s.clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Concept;
    use crate::llm::PromptReplayOracle;

    fn graph() -> ConceptGraph {
        let names = [
            "word distributions",
            "vector representations",
            "structured learning",
            "sentence representations",
            "sentence simplification",
            "planning",
        ];
        ConceptGraph::from_parts(
            names.iter().enumerate().map(|(i, n)| Concept {
                id: ConceptId(i as u32),
                name: n.to_string(),
                domain: "nlp".into(),
            }),
            (0..4).map(|i| (ConceptId(i), ConceptId(i + 1))),
        )
        .unwrap()
    }

    fn item(task: u8, q: &str) -> TutorQaItem {
        TutorQaItem {
            task,
            question: q.into(),
            answer: TutorAnswer::default(),
        }
    }

    const T3: &str = "In the domain of natural language processing, I know about word distributions, now I want to learn about sentence simplification, what concept path should I follow?";

    #[test]
    fn extracts_in_question_order() {
        let g = graph();
        let p = Pipeline::new(&g, PipelineConfig::default());
        assert_eq!(
            p.extract_concepts(T3),
            vec!["word distributions", "sentence simplification"]
        );
        assert!(p.extract_concepts("nothing here").is_empty());
    }

    #[test]
    fn template_commands() {
        let vocab = vec!["X".to_string(), "Y".to_string()];
        let o = TemplateCommandOracle::new(vocab);
        assert_eq!(
            generate_command("does X help Y?", 1, &o).unwrap(),
            r#"REACHABLE "X" -> "Y""#
        );
        assert_eq!(
            generate_command("from X to Y?", 3, &o).unwrap(),
            r#"SHORTEST "X" -> "Y""#
        );
        assert_eq!(
            generate_command("anything", 1, &GarbageOracle).unwrap(),
            GarbageOracle.complete("").unwrap()
        );
    }

    #[test]
    fn path_rendering() {
        let g = graph();
        assert_eq!(
            render_paths(&g, &[vec![ConceptId(0), ConceptId(1), ConceptId(2)]]),
            "word distributions;vector representations;structured learning"
        );
        assert_eq!(render_paths(&g, &[]), "EMPTY");
    }

    #[test]
    fn task_three_with_and_without_fallback() {
        let g = graph();
        let p = Pipeline::new(&g, PipelineConfig::default());
        let cmd = TemplateCommandOracle::new(p.vocabulary().to_vec());
        let (ans, trace) = p.run_task(&item(3, T3), &cmd, &FollowingAnswerOracle).unwrap();
        assert_eq!(
            ans,
            "vector representations;structured learning;sentence representations"
        );
        assert!(!trace.fallback_used);
        let (ans2, trace2) = p
            .run_task(&item(3, T3), &GarbageOracle, &FollowingAnswerOracle)
            .unwrap();
        assert_eq!(ans2, ans);
        assert!(trace2.fallback_used && trace2.command_error.is_some());
    }

    #[test]
    fn task_one_yes_and_no() {
        let g = graph();
        let p = Pipeline::new(&g, PipelineConfig::default());
        let yes = item(
            1,
            "I already learned about word distributions, would it help for sentence simplification?",
        );
        let no = item(
            1,
            "I already learned about planning, would it help for sentence simplification?",
        );
        assert_eq!(
            p.run_task(&yes, &GarbageOracle, &FollowingAnswerOracle).unwrap().0,
            "Yes"
        );
        assert_eq!(p.run_task(&no, &GarbageOracle, &FollowingAnswerOracle).unwrap().0, "No");
    }

    #[test]
    fn fallback_exhausted_without_concepts() {
        let g = graph();
        let p = Pipeline::new(&g, PipelineConfig::default());
        let err = p.run_task(&item(1, "what about cats?"), &GarbageOracle, &FollowingAnswerOracle);
        assert!(matches!(err, Err(PipelineError::FallbackExhausted { .. })));
    }

    #[test]
    fn unparseable_task_one_answer_retries_then_fails() {
        let g = graph();
        let p = Pipeline::new(&g, PipelineConfig::default());
        let calls = std::sync::atomic::AtomicUsize::new(0);
        let vague = |_: &str| {
            calls.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
            Ok::<_, OracleError>("perhaps".to_string())
        };
        let q = item(1, "word distributions then planning?");
        let err = p.run_task(&q, &GarbageOracle, &vague);
        assert!(matches!(err, Err(PipelineError::UnparseableAnswer { .. })));
        assert_eq!(calls.load(std::sync::atomic::Ordering::SeqCst), 2);
    }

    #[test]
    fn traces_replay() {
        let g = graph();
        let p = Pipeline::new(&g, PipelineConfig::default());
        let (ans, trace) = p
            .run_task(&item(3, T3), &GarbageOracle, &FollowingAnswerOracle)
            .unwrap();
        let replay = PromptReplayOracle::new(trace.exchanges.clone());
        let (again, trace2) = p.run_task(&item(3, T3), &replay, &replay).unwrap();
        assert_eq!(again, ans);
        assert_eq!(trace2, trace);
    }

    #[test]
    fn task_five_uses_neighborhoods() {
        let g = graph();
        let p = Pipeline::new(&g, PipelineConfig::default());
        let q = item(
            5,
            "I already know about structured learning. What project can I work on?",
        );
        let (ans, trace) = p.run_task(&q, &GarbageOracle, &FollowingAnswerOracle).unwrap();
        assert!(!trace.fallback_used);
        assert_eq!(trace.parsed_queries.len(), 2);
        assert!(ans.contains("vector representations") && ans.contains("sentence representations"));
    }

    #[test]
    fn item_parsing_and_validation() {
        let a: TutorQaItem = serde_json::from_str(r#"{"task":1,"question":"q","answer":"Yes"}"#).unwrap();
        assert_eq!(a.gold_verdict(), Some(Verdict::Yes));
        let b: TutorQaItem = serde_json::from_str(r#"{"task":2,"question":"q","answer":"a;b ; c"}"#).unwrap();
        assert_eq!(b.gold_concepts(), vec!["a", "b", "c"]);
        let c: TutorQaItem = serde_json::from_str(r#"{"task":3,"question":"q","answer":["x","y"]}"#).unwrap();
        assert_eq!(c.gold_concepts(), vec!["x", "y"]);
        let d: TutorQaItem = serde_json::from_str(r#"{"task":5,"question":"q"}"#).unwrap();
        assert!(d.validate().is_ok());
        let e: TutorQaItem = serde_json::from_str(r#"{"task":1,"question":"q","answer":"maybe"}"#).unwrap();
        assert!(e.validate().is_err());
        assert!(item(6, "q").validate().is_err());
    }
}
