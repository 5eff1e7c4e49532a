mod common;

use std::collections::BTreeSet;

use cgraph::graph::{ConceptGraph, ConceptId};
use cgraph::llm::PromptReplayOracle;
use cgraph::pipeline::{
    split_concepts, FollowingAnswerOracle, GarbageOracle, Pipeline, PipelineConfig, TemplateCommandOracle, TutorAnswer,
    TutorQaItem,
};
use cgraph::text::normalize_name;
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn task1_items(graph: &ConceptGraph, count: usize, seed: u64) -> Vec<TutorQaItem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = graph.len() as u32;
    let mut items = Vec::new();
    let (mut yes, mut no) = (0, 0);
    while items.len() < count {
        let (a, b) = (ConceptId(rng.random_range(0..n)), ConceptId(rng.random_range(0..n)));
        if a == b {
            continue;
        }
        let reachable = graph.has_path(a, b).unwrap();
        // keep the classes roughly balanced
        if (reachable && yes >= count / 2) || (!reachable && no >= count / 2) {
            continue;
        }
        if reachable {
            yes += 1;
        } else {
            no += 1;
        }
        items.push(TutorQaItem {
            task: 1,
            question: format!(
                "In the domain of testing, does learning {} help with understanding {}?",
                graph.name(a).unwrap(),
                graph.name(b).unwrap()
            ),
            answer: TutorAnswer::Text(if reachable { "Yes" } else { "No" }.into()),
        });
    }
    items
}

fn accuracy(pipeline: &Pipeline<'_>, items: &[TutorQaItem], command: &dyn cgraph::llm::Oracle) -> (f64, usize) {
    let results = pipeline.run_batch(items, command, &FollowingAnswerOracle);
    let mut correct = 0;
    let mut fallbacks = 0;
    for (item, r) in items.iter().zip(results) {
        let (answer, trace) = r.unwrap();
        if answer.eq_ignore_ascii_case(match &item.answer {
            TutorAnswer::Text(t) => t,
            TutorAnswer::List(_) => unreachable!(),
        }) {
            correct += 1;
        }
        fallbacks += usize::from(trace.fallback_used);
    }
    (correct as f64 / items.len() as f64, fallbacks)
}

#[test]
fn task1_is_exact_with_templates_and_with_fallback() {
    let graph = random_dag(30, 0.08, 21);
    let items = task1_items(&graph, 100, 4);
    let pipeline = Pipeline::new(&graph, PipelineConfig::default());
    let template = TemplateCommandOracle::new(pipeline.vocabulary().to_vec());
    assert_eq!(accuracy(&pipeline, &items, &template), (1.0, 0));
    assert_eq!(accuracy(&pipeline, &items, &GarbageOracle), (1.0, 100));
}

#[test]
fn task2_lists_the_prerequisites() {
    let graph = random_dag(25, 0.12, 22);
    let pipeline = Pipeline::new(&graph, PipelineConfig::default());
    let template = TemplateCommandOracle::new(pipeline.vocabulary().to_vec());
    for t in graph.ids() {
        let name = graph.name(t).unwrap();
        let item = TutorQaItem {
            task: 2,
            question: format!("What should I learn before {name}?"),
            answer: TutorAnswer::List(Vec::new()),
        };
        let (answer, trace) = pipeline.run_task(&item, &template, &FollowingAnswerOracle).unwrap();
        assert!(!trace.fallback_used);
        let expected: BTreeSet<String> = graph
            .prerequisite_paths(t, 3)
            .unwrap()
            .concepts()
            .into_iter()
            .filter(|&c| c != t)
            .map(|c| normalize_name(graph.name(c).unwrap()))
            .collect();
        let got: BTreeSet<String> = split_concepts(&answer).iter().map(|s| normalize_name(s)).collect();
        assert_eq!(got, expected, "{name}");
    }
}

#[test]
fn traces_replay_exactly() {
    let graph = random_dag(20, 0.1, 23);
    let items = task1_items(&graph, 20, 6);
    let pipeline = Pipeline::new(&graph, PipelineConfig::default());
    let template = TemplateCommandOracle::new(pipeline.vocabulary().to_vec());
    let first: Vec<_> = pipeline
        .run_batch(&items, &template, &FollowingAnswerOracle)
        .into_iter()
        .map(Result::unwrap)
        .collect();
    let replay = PromptReplayOracle::new(first.iter().flat_map(|(_, t)| t.exchanges.clone()));
    let second: Vec<_> = pipeline
        .run_batch(&items, &replay, &replay)
        .into_iter()
        .map(Result::unwrap)
        .collect();
    assert_eq!(first, second);
}

#[test]
fn unknown_concepts_exhaust_the_fallback() {
    let graph = random_dag(5, 0.5, 24);
    let pipeline = Pipeline::new(&graph, PipelineConfig::default());
    let item = TutorQaItem {
        task: 3,
        question: "How do I get from quantum chromodynamics to topology?".into(),
        answer: TutorAnswer::List(vec!["x".into()]),
    };
    let err = pipeline
        .run_task(&item, &GarbageOracle, &FollowingAnswerOracle)
        .unwrap_err();
    assert!(err.to_string().contains("fallback failed"), "{err}");
}
