mod eval;
mod fixtures;
mod qa;
mod recover;
mod train;

use std::path::Path;

use cgraph::eval::{Embedder, ExactMatchEmbedder, HashEmbedder, StoreEmbedder, TrigramEmbedder};
use cgraph::graph::{Concept, ConceptGraph};
use cgraph::io::{read_concepts, read_jsonl, read_pairs, LabeledPair};
use cgraph::llm::HttpEmbedder;
use serde::de::DeserializeOwned;

use crate::error::CliError;
use crate::manifest::Session;
use crate::settings::{live_endpoint, Settings, DEFAULT_DOMAIN};
use crate::specs::EmbedderSpec;

pub use eval::{eval, EvalArgs, EvalMode};
pub use fixtures::{fixtures, FixturesArgs};
pub use qa::{qa, AnswerLine, QaArgs};
pub use recover::{recover, JudgmentLine, RecoverArgs};
pub use train::{train, ModelKind, TrainArgs};

fn in_file(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::data(path.display(), e)
}

fn domain(flag: Option<&String>, settings: &Settings) -> String {
    flag.or(settings.domain.as_ref())
        .cloned()
        .unwrap_or_else(|| DEFAULT_DOMAIN.to_string())
}

fn load_concepts(session: &mut Session, path: &Path, domain: &str) -> Result<Vec<Concept>, CliError> {
    let bytes = session.read(path)?;
    let concepts = read_concepts(&bytes[..], domain).map_err(|e| in_file(path, e))?;
    if concepts.is_empty() {
        return Err(in_file(path, "no concepts"));
    }
    Ok(concepts)
}

fn concept_graph(concepts: Vec<Concept>, edges: &[LabeledPair], path: &Path) -> Result<ConceptGraph, CliError> {
    cgraph::io::graph_from_pairs(concepts, edges).map_err(|e| in_file(path, e))
}

fn load_pairs(session: &mut Session, path: &Path) -> Result<Vec<LabeledPair>, CliError> {
    let bytes = session.read(path)?;
    read_pairs(&bytes[..]).map_err(|e| in_file(path, e))
}

fn load_jsonl<T: DeserializeOwned>(session: &mut Session, path: &Path) -> Result<Vec<T>, CliError> {
    let bytes = session.read(path)?;
    read_jsonl(&bytes[..]).map_err(|e| in_file(path, e))
}

fn build_embedder(
    spec: &EmbedderSpec,
    settings: &Settings,
    session: &mut Session,
) -> Result<Box<dyn Embedder>, CliError> {
    Ok(match spec {
        EmbedderSpec::Exact => Box::new(ExactMatchEmbedder::default()),
        EmbedderSpec::Hash(dim) => Box::new(HashEmbedder {
            seed: session.seed,
            dim: *dim,
        }),
        EmbedderSpec::Trigram => Box::new(TrigramEmbedder::default()),
        EmbedderSpec::Store(path) => {
            let bytes = session.read(path)?;
            Box::new(StoreEmbedder::from_jsonl(&bytes[..]).map_err(|e| in_file(path, e))?)
        }
        EmbedderSpec::Live => Box::new(HttpEmbedder::new(live_endpoint(
            settings.embedder.as_ref(),
            "embedder",
        )?)),
    })
}

fn to_json<T: serde::Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("plain data serializes")
}
