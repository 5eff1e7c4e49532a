//! Concept-graph recovery, supervised link prediction, graph-grounded
//! question answering and the metrics used to evaluate them.

pub mod corpus;
pub mod eval;
pub mod graph;
pub mod io;
pub mod linkpred;
pub mod llm;
pub mod pipeline;
pub mod query;
pub mod recovery;
pub mod text;
