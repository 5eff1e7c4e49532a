use crate::corpus::{CorpusDocument, RetrievalIndex, WikiStore};
use crate::graph::{ConceptGraph, Direction};
use crate::text::{contains_token_run, tokenize};

use super::{PromptVariant, RecoveryError, VariantKind};

/// External material the enriched prompt variants draw from.
#[derive(Debug, Clone, Copy)]
pub struct RecoveryContext<'a> {
    /// Documents scanned for concept mentions (Doc.) or retrieved from (RAG).
    pub documents: Option<&'a [CorpusDocument]>,
    /// Index built over `documents`, required by RAG.
    pub index: Option<&'a RetrievalIndex>,
    /// Labeled training edges, required by Con.
    pub training: Option<&'a ConceptGraph>,
    pub wiki: Option<&'a WikiStore>,
    /// Cap on the additional-information text, in characters.
    pub max_info_chars: usize,
}

impl Default for RecoveryContext<'_> {
    fn default() -> Self {
        Self {
            documents: None,
            index: None,
            training: None,
            wiki: None,
            max_info_chars: 4000,
        }
    }
}

fn truncate_chars(mut s: String, max: usize) -> String {
    if let Some((cut, _)) = s.char_indices().nth(max) {
        s.truncate(cut);
    }
    s
}

fn neighbor_names(graph: &ConceptGraph, concept: &str, dir: Direction, hops: usize) -> String {
    let Some(id) = graph.id_of(concept) else {
        return String::new();
    };
    let paths = graph.neighbors(id, dir, hops).expect("resolved id");
    let far_end = |p: &Vec<_>| match dir {
        Direction::Out => *p.last().expect("non-empty"),
        Direction::In => p[0],
    };
    paths
        .paths
        .iter()
        .map(far_end)
        .filter_map(|id| graph.name(id))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Builds the variant-specific additional information for the pair.
pub fn build_additional_info(
    variant: PromptVariant,
    concept_a: &str,
    concept_b: &str,
    ctx: &RecoveryContext<'_>,
) -> Result<String, RecoveryError> {
    let info = match variant {
        PromptVariant::ZeroShot | PromptVariant::CoT => String::new(),
        PromptVariant::ZeroShotDoc => {
            let docs = ctx
                .documents
                .ok_or(RecoveryError::MissingContext(VariantKind::ZeroShotDoc, "documents"))?;
            let (ta, tb) = (tokenize(concept_a), tokenize(concept_b));
            docs.iter()
                .filter(|d| {
                    let toks = tokenize(&d.text);
                    contains_token_run(&toks, &ta) || contains_token_run(&toks, &tb)
                })
                .map(|d| d.text.as_str())
                .collect::<Vec<_>>()
                .join(" ")
        }
        PromptVariant::ZeroShotCon { hops } => {
            let g = ctx.training.ok_or(RecoveryError::MissingContext(
                VariantKind::ZeroShotCon,
                "training edges",
            ))?;
            let hops = hops.max(1);
            let succ = |c| neighbor_names(g, c, Direction::Out, hops);
            let pred = |c| neighbor_names(g, c, Direction::In, hops);
            format!(
                "We know that {a} is a prerequisite of the following concepts:{sa};\n\
                 The following concepts are the prerequisites of {a} : {pa};\n\
                 We know that {b} is a prerequisite of the following concepts:{sb};\n\
                 The following concepts are the prerequisites of {b} : {pb}.",
                a = concept_a,
                b = concept_b,
                sa = succ(concept_a),
                pa = pred(concept_a),
                sb = succ(concept_b),
                pb = pred(concept_b),
            )
        }
        PromptVariant::ZeroShotWiki => {
            let wiki = ctx.wiki.ok_or(RecoveryError::MissingContext(
                VariantKind::ZeroShotWiki,
                "wiki paragraphs",
            ))?;
            format!(
                "{}\n{}",
                wiki.get(concept_a).unwrap_or_default(),
                wiki.get(concept_b).unwrap_or_default()
            )
        }
        PromptVariant::ZeroShotRag { k } => {
            let missing = RecoveryError::MissingContext(VariantKind::ZeroShotRag, "retrieval index");
            let (Some(index), Some(docs)) = (ctx.index, ctx.documents) else {
                return Err(missing);
            };
            index
                .retrieve(&format!("{concept_a} {concept_b}"), k)
                .unwrap_or_default()
                .into_iter()
                .filter_map(|(pos, _)| docs.get(pos as usize))
                .map(|d| d.text.as_str())
                .collect::<Vec<_>>()
                .join("\n")
        }
    };
    Ok(truncate_chars(info, ctx.max_info_chars))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ingest;
    use crate::graph::{Concept, ConceptId};

    fn training() -> ConceptGraph {
        let names = ["a", "x", "b", "y"];
        ConceptGraph::from_parts(
            names.iter().enumerate().map(|(i, n)| Concept {
                id: ConceptId(i as u32),
                name: n.to_string(),
                domain: "NLP".into(),
            }),
            [(ConceptId(1), ConceptId(0)), (ConceptId(2), ConceptId(3))],
        )
        .unwrap()
    }

    #[test]
    fn con_uses_sentence_frames() {
        let g = training();
        let ctx = RecoveryContext {
            training: Some(&g),
            ..Default::default()
        };
        let info = build_additional_info(PromptVariant::ZeroShotCon { hops: 1 }, "a", "b", &ctx).unwrap();
        assert!(info.contains("The following concepts are the prerequisites of a : x"));
        assert!(info.contains("We know that b is a prerequisite of the following concepts:y;"));
        assert!(info.ends_with("The following concepts are the prerequisites of b : ."));
    }

    #[test]
    fn wiki_concatenates_paragraphs() {
        let mut w = WikiStore::default();
        w.insert("a", "P1");
        w.insert("b", "P2");
        let ctx = RecoveryContext {
            wiki: Some(&w),
            ..Default::default()
        };
        assert_eq!(
            build_additional_info(PromptVariant::ZeroShotWiki, "a", "b", &ctx).unwrap(),
            "P1\nP2"
        );
    }

    #[test]
    fn doc_mentions_use_token_runs() {
        let docs = ingest(
            [
                "we study pos tagging today",
                "nothing relevant",
                "Viterbi-algorithm rocks",
            ],
            1,
            "t",
        );
        let ctx = RecoveryContext {
            documents: Some(&docs),
            ..Default::default()
        };
        let info = build_additional_info(PromptVariant::ZeroShotDoc, "Viterbi Algorithm", "POS Tagging", &ctx).unwrap();
        assert_eq!(info, "we study pos tagging today Viterbi-algorithm rocks");
        let none = build_additional_info(PromptVariant::ZeroShotDoc, "parsing", "semantics", &ctx).unwrap();
        assert_eq!(none, "");
    }

    #[test]
    fn rag_takes_top_k_passages() {
        let docs = ingest(["topic models are fun", "lda topic models", "unrelated text"], 1, "t");
        let index = RetrievalIndex::build(&docs);
        let ctx = RecoveryContext {
            documents: Some(&docs),
            index: Some(&index),
            ..Default::default()
        };
        let info = build_additional_info(PromptVariant::ZeroShotRag { k: 1 }, "lda", "topic models", &ctx).unwrap();
        assert_eq!(info, "lda topic models");
    }

    #[test]
    fn missing_context_is_an_error() {
        let ctx = RecoveryContext::default();
        for v in [
            PromptVariant::ZeroShotDoc,
            PromptVariant::ZeroShotCon { hops: 1 },
            PromptVariant::ZeroShotWiki,
            PromptVariant::ZeroShotRag { k: 3 },
        ] {
            assert!(matches!(
                build_additional_info(v, "a", "b", &ctx),
                Err(RecoveryError::MissingContext(..))
            ));
        }
        assert_eq!(build_additional_info(PromptVariant::CoT, "a", "b", &ctx).unwrap(), "");
    }

    #[test]
    fn info_is_capped() {
        let mut w = WikiStore::default();
        w.insert("a", "x".repeat(100));
        let ctx = RecoveryContext {
            wiki: Some(&w),
            max_info_chars: 10,
            ..Default::default()
        };
        assert_eq!(
            build_additional_info(PromptVariant::ZeroShotWiki, "a", "b", &ctx)
                .unwrap()
                .len(),
            10
        );
    }
}
