//! TSV and JSON Lines readers/writers for concepts, edges and labeled pairs.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{Concept, ConceptGraph, ConceptId, GraphError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A pair from an edge file. `label` is `None` for plain edge lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledPair {
    pub source: ConceptId,
    pub target: ConceptId,
    pub label: Option<bool>,
}

impl LabeledPair {
    /// Rows without a label column count as edges.
    pub fn is_positive(&self) -> bool {
        self.label.unwrap_or(true)
    }
}

fn data_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String), IoError>> {
    reader
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l)).map_err(IoError::from))
        .filter(|r| !matches!(r, Ok((_, l)) if l.trim().is_empty()))
}

fn parse_id(field: &str, line: usize) -> Result<ConceptId, IoError> {
    field.trim().parse().map(ConceptId).map_err(|_| IoError::Parse {
        line,
        message: format!("invalid concept id {field:?}"),
    })
}

/// Reads `id<TAB>name` rows.
pub fn read_concepts<R: BufRead>(reader: R, domain: &str) -> Result<Vec<Concept>, IoError> {
    data_lines(reader)
        .map(|r| {
            let (line, text) = r?;
            let (id, name) = text.split_once('\t').ok_or_else(|| IoError::Parse {
                line,
                message: "expected id<TAB>name".into(),
            })?;
            Ok(Concept {
                id: parse_id(id, line)?,
                name: name.trim().to_string(),
                domain: domain.to_string(),
            })
        })
        .collect()
}

/// Reads `source<TAB>target[<TAB>label]` rows, label in {0,1}.
pub fn read_pairs<R: BufRead>(reader: R) -> Result<Vec<LabeledPair>, IoError> {
    data_lines(reader)
        .map(|r| {
            let (line, text) = r?;
            let fields: Vec<&str> = text.split('\t').collect();
            let label = match fields.as_slice() {
                [_, _] => None,
                [_, _, l] => match l.trim() {
                    "0" => Some(false),
                    "1" => Some(true),
                    other => {
                        return Err(IoError::Parse {
                            line,
                            message: format!("label must be 0 or 1, got {other:?}"),
                        })
                    }
                },
                _ => {
                    return Err(IoError::Parse {
                        line,
                        message: "expected source<TAB>target[<TAB>label]".into(),
                    })
                }
            };
            Ok(LabeledPair {
                source: parse_id(fields[0], line)?,
                target: parse_id(fields[1], line)?,
                label,
            })
        })
        .collect()
}

/// Builds a graph from concepts and the positive rows of a pair file.
pub fn graph_from_pairs(concepts: Vec<Concept>, pairs: &[LabeledPair]) -> Result<ConceptGraph, GraphError> {
    ConceptGraph::from_parts(
        concepts,
        pairs.iter().filter(|p| p.is_positive()).map(|p| (p.source, p.target)),
    )
}

pub fn write_edges<W: Write>(mut w: W, graph: &ConceptGraph) -> std::io::Result<()> {
    for (s, t) in graph.edges() {
        writeln!(w, "{s}\t{t}")?;
    }
    Ok(())
}

pub fn write_concepts<W: Write>(mut w: W, graph: &ConceptGraph) -> std::io::Result<()> {
    for c in graph.concepts() {
        writeln!(w, "{}\t{}", c.id, c.name)?;
    }
    Ok(())
}

pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>, IoError> {
    data_lines(reader)
        .map(|r| {
            let (line, text) = r?;
            serde_json::from_str(&text).map_err(|e| IoError::Parse {
                line,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn write_jsonl<T: Serialize, W: Write>(mut w: W, items: &[T]) -> std::io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
