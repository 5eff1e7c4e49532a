//! GQL-mini: a four-form query language over a [`ConceptGraph`].

mod parser;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ConceptGraph, ConceptId, Direction, GraphError, PathResult};

pub use parser::{parse, parse_script, SyntaxError};

/// Grammar reference handed to command-generating oracles.
pub const GRAMMAR_REFERENCE: &str = include_str!("../../../../docs/gql-mini.md");

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphQuery {
    Reachable {
        from: String,
        to: String,
    },
    ShortestPath {
        from: String,
        to: String,
    },
    Prerequisites {
        concept: String,
        depth: u32,
    },
    Neighbors {
        concept: String,
        direction: Direction,
        hops: u32,
    },
}

fn quote(name: &str) -> String {
    let mut out = String::with_capacity(name.len() + 2);
    out.push('"');
    for c in name.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// Canonical rendering; `parse(&print(q)) == Ok(q)`.
pub fn print(query: &GraphQuery) -> String {
    match query {
        GraphQuery::Reachable { from, to } => format!("REACHABLE {} -> {}", quote(from), quote(to)),
        GraphQuery::ShortestPath { from, to } => format!("SHORTEST {} -> {}", quote(from), quote(to)),
        GraphQuery::Prerequisites { concept, depth } => format!("PREREQ {} DEPTH {depth}", quote(concept)),
        GraphQuery::Neighbors {
            concept,
            direction,
            hops,
        } => format!(
            "NEIGHBORS {} {} HOPS {hops}",
            quote(concept),
            match direction {
                Direction::In => "IN",
                Direction::Out => "OUT",
            }
        ),
    }
}

impl fmt::Display for GraphQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print(self))
    }
}

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("unknown concept {0:?}")]
    UnknownConcept(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutcomeValue {
    /// `witness` is the lexicographically smallest shortest path when reachable.
    Reachable {
        reachable: bool,
        witness: Option<Vec<ConceptId>>,
    },
    Paths(PathResult),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub query: GraphQuery,
    /// Ids of the concepts named in the query, in query order.
    pub resolved: Vec<ConceptId>,
    pub value: OutcomeValue,
}

impl QueryOutcome {
    /// Paths that justify the outcome; empty when nothing was found.
    pub fn paths(&self) -> Vec<Vec<ConceptId>> {
        match &self.value {
            OutcomeValue::Reachable { witness, .. } => witness.iter().cloned().collect(),
            OutcomeValue::Paths(p) => p.paths.clone(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.paths().is_empty()
    }
}

fn resolve(graph: &ConceptGraph, name: &str) -> Result<ConceptId, QueryError> {
    graph
        .id_of(name)
        .ok_or_else(|| QueryError::UnknownConcept(name.to_string()))
}

/// Runs a query against `graph`.
pub fn execute(query: &GraphQuery, graph: &ConceptGraph) -> Result<QueryOutcome, QueryError> {
    let (resolved, value) = match query {
        GraphQuery::Reachable { from, to } => {
            let (a, b) = (resolve(graph, from)?, resolve(graph, to)?);
            let reachable = graph.has_path(a, b)?;
            let witness = if reachable {
                graph.shortest_path(a, b)?.paths.into_iter().next()
            } else {
                None
            };
            (vec![a, b], OutcomeValue::Reachable { reachable, witness })
        }
        GraphQuery::ShortestPath { from, to } => {
            let (a, b) = (resolve(graph, from)?, resolve(graph, to)?);
            (vec![a, b], OutcomeValue::Paths(graph.shortest_path(a, b)?))
        }
        GraphQuery::Prerequisites { concept, depth } => {
            let c = resolve(graph, concept)?;
            (
                vec![c],
                OutcomeValue::Paths(graph.prerequisite_paths(c, *depth as usize)?),
            )
        }
        GraphQuery::Neighbors {
            concept,
            direction,
            hops,
        } => {
            let c = resolve(graph, concept)?;
            (
                vec![c],
                OutcomeValue::Paths(graph.neighbors(c, *direction, *hops as usize)?),
            )
        }
    };
    Ok(QueryOutcome {
        query: query.clone(),
        resolved,
        value,
    })
}
