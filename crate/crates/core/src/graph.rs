//! Directed concept graph with the traversal primitives used by recovery,
//! link prediction and the QA pipeline.
//!
//! An edge `(a, b)` means concept `a` is a prerequisite for learning `b`.
//! Cycles are allowed: recovered graphs come from noisy judgments, so every
//! traversal forbids repeating a node inside a single path instead of
//! assuming acyclicity.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::normalize_name;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConceptId(pub u32);

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub id: ConceptId,
    pub name: String,
    pub domain: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("unknown concept id {0}")]
    UnknownConcept(ConceptId),
    #[error("unknown concept name {0:?}")]
    UnknownName(String),
    #[error("self-loop on concept {0}")]
    SelfLoop(ConceptId),
    #[error("duplicate concept id {0}")]
    DuplicateId(ConceptId),
    #[error("duplicate concept name {0:?}")]
    DuplicateName(String),
    #[error("concept {0} has an empty name")]
    EmptyName(ConceptId),
    #[error("ordering is not a permutation of the graph's concept ids")]
    OrderingMismatch,
    #[error("matrix is {rows}x{cols}, expected {expected}x{expected} with 0/1 entries")]
    BadMatrix { rows: usize, cols: usize, expected: usize },
}

/// Traversal direction for hop-bounded neighborhood queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Follow incoming edges (towards prerequisites).
    In,
    /// Follow outgoing edges (towards dependents).
    Out,
}

/// A set of directed paths; every consecutive pair is an edge of the graph
/// that produced it and no path repeats a node.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathResult {
    pub paths: Vec<Vec<ConceptId>>,
}

impl PathResult {
    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Distinct concepts over all paths, in first-seen order.
    pub fn concepts(&self) -> Vec<ConceptId> {
        let mut seen = BTreeSet::new();
        self.paths
            .iter()
            .flatten()
            .copied()
            .filter(|id| seen.insert(*id))
            .collect()
    }
}

#[derive(Debug, Clone, Default)]
pub struct ConceptGraph {
    concepts: BTreeMap<ConceptId, Concept>,
    by_name: HashMap<String, ConceptId>,
    out: BTreeMap<ConceptId, BTreeSet<ConceptId>>,
    inc: BTreeMap<ConceptId, BTreeSet<ConceptId>>,
    edge_count: usize,
}

impl ConceptGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a graph from concepts and an edge list, validating both.
    pub fn from_parts(
        concepts: impl IntoIterator<Item = Concept>,
        edges: impl IntoIterator<Item = (ConceptId, ConceptId)>,
    ) -> Result<Self, GraphError> {
        let mut g = Self::new();
        for c in concepts {
            g.add_concept(c)?;
        }
        for (s, t) in edges {
            g.add_edge(s, t)?;
        }
        Ok(g)
    }

    /// Inverse of [`ConceptGraph::adjacency`].
    pub fn from_adjacency(
        concepts: impl IntoIterator<Item = Concept>,
        ordering: &[ConceptId],
        matrix: &Array2<u8>,
    ) -> Result<Self, GraphError> {
        let mut g = Self::from_parts(concepts, [])?;
        g.check_ordering(ordering)?;
        let n = ordering.len();
        if matrix.dim() != (n, n) || matrix.iter().any(|&v| v > 1) {
            return Err(GraphError::BadMatrix {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
                expected: n,
            });
        }
        for ((i, j), &v) in matrix.indexed_iter() {
            if v == 1 {
                g.add_edge(ordering[i], ordering[j])?;
            }
        }
        Ok(g)
    }

    pub fn add_concept(&mut self, concept: Concept) -> Result<(), GraphError> {
        let key = normalize_name(&concept.name);
        if key.is_empty() {
            return Err(GraphError::EmptyName(concept.id));
        }
        if self.concepts.contains_key(&concept.id) {
            return Err(GraphError::DuplicateId(concept.id));
        }
        if self.by_name.contains_key(&key) {
            return Err(GraphError::DuplicateName(concept.name));
        }
        self.by_name.insert(key, concept.id);
        self.out.insert(concept.id, BTreeSet::new());
        self.inc.insert(concept.id, BTreeSet::new());
        self.concepts.insert(concept.id, concept);
        Ok(())
    }

    /// Inserts `source -> target`. Idempotent.
    pub fn add_edge(&mut self, source: ConceptId, target: ConceptId) -> Result<(), GraphError> {
        self.require(source)?;
        self.require(target)?;
        if source == target {
            return Err(GraphError::SelfLoop(source));
        }
        if self.out.get_mut(&source).expect("checked").insert(target) {
            self.inc.get_mut(&target).expect("checked").insert(source);
            self.edge_count += 1;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn concept(&self, id: ConceptId) -> Option<&Concept> {
        self.concepts.get(&id)
    }

    pub fn name(&self, id: ConceptId) -> Option<&str> {
        self.concepts.get(&id).map(|c| c.name.as_str())
    }

    /// Concepts in ascending id order.
    pub fn concepts(&self) -> impl Iterator<Item = &Concept> {
        self.concepts.values()
    }

    pub fn ids(&self) -> Vec<ConceptId> {
        self.concepts.keys().copied().collect()
    }

    /// Looks a concept up by normalized name.
    pub fn id_of(&self, name: &str) -> Option<ConceptId> {
        self.by_name.get(&normalize_name(name)).copied()
    }

    pub fn resolve(&self, name: &str) -> Result<ConceptId, GraphError> {
        self.id_of(name)
            .ok_or_else(|| GraphError::UnknownName(name.to_string()))
    }

    pub fn has_edge(&self, source: ConceptId, target: ConceptId) -> bool {
        self.out.get(&source).is_some_and(|s| s.contains(&target))
    }

    /// All edges in ascending `(source, target)` order.
    pub fn edges(&self) -> impl Iterator<Item = (ConceptId, ConceptId)> + '_ {
        self.out.iter().flat_map(|(&s, ts)| ts.iter().map(move |&t| (s, t)))
    }

    pub fn successors(&self, id: ConceptId) -> impl Iterator<Item = ConceptId> + '_ {
        self.out.get(&id).into_iter().flatten().copied()
    }

    pub fn predecessors(&self, id: ConceptId) -> impl Iterator<Item = ConceptId> + '_ {
        self.inc.get(&id).into_iter().flatten().copied()
    }

    fn require(&self, id: ConceptId) -> Result<(), GraphError> {
        if self.concepts.contains_key(&id) {
            Ok(())
        } else {
            Err(GraphError::UnknownConcept(id))
        }
    }

    fn step(&self, id: ConceptId, dir: Direction) -> impl Iterator<Item = ConceptId> + '_ {
        let map = match dir {
            Direction::Out => &self.out,
            Direction::In => &self.inc,
        };
        map.get(&id).into_iter().flatten().copied()
    }

    /// Hop distances from `start` following `dir`, limited to `max_hops`.
    /// `start` itself is at distance 0.
    fn bfs(&self, start: ConceptId, dir: Direction, max_hops: usize) -> BTreeMap<ConceptId, usize> {
        let mut dist = BTreeMap::from([(start, 0usize)]);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            let d = dist[&u];
            if d == max_hops {
                continue;
            }
            for v in self.step(u, dir) {
                if let std::collections::btree_map::Entry::Vacant(e) = dist.entry(v) {
                    e.insert(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// True iff a directed path with at least one edge and no repeated node
    /// leads from `source` to `target`. Always false when they are equal.
    pub fn has_path(&self, source: ConceptId, target: ConceptId) -> Result<bool, GraphError> {
        self.require(source)?;
        self.require(target)?;
        if source == target {
            return Ok(false);
        }
        Ok(self.bfs(source, Direction::Out, usize::MAX).contains_key(&target))
    }

    /// Every minimum-hop path from `source` to `target`, both endpoints
    /// included, sorted lexicographically by id sequence. Empty when
    /// unreachable (or when `source == target`).
    pub fn shortest_path(&self, source: ConceptId, target: ConceptId) -> Result<PathResult, GraphError> {
        self.require(source)?;
        self.require(target)?;
        if source == target {
            return Ok(PathResult::default());
        }
        let from_src = self.bfs(source, Direction::Out, usize::MAX);
        let Some(&total) = from_src.get(&target) else {
            return Ok(PathResult::default());
        };
        let to_tgt = self.bfs(target, Direction::In, usize::MAX);

        // Walk only edges that lie on some shortest path.
        let mut paths = Vec::new();
        let mut stack = vec![vec![source]];
        while let Some(path) = stack.pop() {
            let u = *path.last().expect("non-empty");
            if u == target {
                paths.push(path);
                continue;
            }
            let du = path.len() - 1;
            for v in self.successors(u) {
                if to_tgt.get(&v).is_some_and(|&dt| du + 1 + dt == total) {
                    let mut next = path.clone();
                    next.push(v);
                    stack.push(next);
                }
            }
        }
        paths.sort();
        Ok(PathResult { paths })
    }

    /// Ancestor paths ending at `target`: every simple path of 1 to
    /// `max_depth` edges whose last node is `target`, sorted by id sequence.
    pub fn prerequisite_paths(&self, target: ConceptId, max_depth: usize) -> Result<PathResult, GraphError> {
        self.require(target)?;
        let mut paths = Vec::new();
        // Paths are grown backwards from the target, then reversed.
        let mut stack = vec![vec![target]];
        while let Some(rev) = stack.pop() {
            if rev.len() > 1 {
                paths.push(rev.iter().rev().copied().collect::<Vec<_>>());
            }
            if rev.len() > max_depth {
                continue;
            }
            let head = *rev.last().expect("non-empty");
            for p in self.predecessors(head) {
                if !rev.contains(&p) {
                    let mut next = rev.clone();
                    next.push(p);
                    stack.push(next);
                }
            }
        }
        paths.sort();
        Ok(PathResult { paths })
    }

    /// Concepts within `hops` edges of `start` in direction `dir`, each
    /// reported with its lexicographically smallest shortest path. For
    /// [`Direction::Out`] paths start at `start`; for [`Direction::In`]
    /// they end at it.
    pub fn neighbors(&self, start: ConceptId, dir: Direction, hops: usize) -> Result<PathResult, GraphError> {
        self.require(start)?;
        let dist = self.bfs(start, dir, hops);
        // Smallest shortest path per node, built level by level.
        let mut best: BTreeMap<ConceptId, Vec<ConceptId>> = BTreeMap::from([(start, vec![start])]);
        let mut by_level: BTreeMap<usize, Vec<ConceptId>> = BTreeMap::new();
        for (&v, &d) in &dist {
            by_level.entry(d).or_default().push(v);
        }
        for (&d, nodes) in by_level.iter().skip(1) {
            for &v in nodes {
                let cand = self
                    .step(
                        v,
                        match dir {
                            Direction::Out => Direction::In,
                            Direction::In => Direction::Out,
                        },
                    )
                    .filter(|u| dist.get(u) == Some(&(d - 1)))
                    .map(|u| {
                        let mut p = best[&u].clone();
                        p.push(v);
                        p
                    })
                    .min()
                    .expect("bfs parent exists");
                best.insert(v, cand);
            }
        }
        let mut paths: Vec<Vec<ConceptId>> = best
            .into_iter()
            .filter(|(v, _)| *v != start)
            .map(|(_, mut p)| {
                if dir == Direction::In {
                    p.reverse();
                }
                p
            })
            .collect();
        paths.sort();
        Ok(PathResult { paths })
    }

    fn check_ordering(&self, ordering: &[ConceptId]) -> Result<(), GraphError> {
        let set: BTreeSet<_> = ordering.iter().copied().collect();
        if ordering.len() != self.len() || set.len() != ordering.len() {
            return Err(GraphError::OrderingMismatch);
        }
        if set.iter().any(|id| !self.concepts.contains_key(id)) {
            return Err(GraphError::OrderingMismatch);
        }
        Ok(())
    }

    /// 0/1 adjacency matrix with rows and columns in `ordering`.
    pub fn adjacency(&self, ordering: &[ConceptId]) -> Result<Array2<u8>, GraphError> {
        self.check_ordering(ordering)?;
        let pos: HashMap<ConceptId, usize> = ordering.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let n = ordering.len();
        let mut a = Array2::zeros((n, n));
        for (s, t) in self.edges() {
            a[[pos[&s], pos[&t]]] = 1;
        }
        Ok(a)
    }

    pub fn is_acyclic(&self) -> bool {
        let mut indeg: BTreeMap<ConceptId, usize> = self.inc.iter().map(|(&k, v)| (k, v.len())).collect();
        let mut queue: VecDeque<ConceptId> = indeg.iter().filter(|(_, &d)| d == 0).map(|(&k, _)| k).collect();
        let mut seen = 0;
        while let Some(u) = queue.pop_front() {
            seen += 1;
            for v in self.successors(u) {
                let d = indeg.get_mut(&v).expect("known");
                *d -= 1;
                if *d == 0 {
                    queue.push_back(v);
                }
            }
        }
        seen == self.len()
    }

    /// Renders a path as semicolon-joined concept names.
    pub fn render_path(&self, path: &[ConceptId]) -> String {
        path.iter()
            .map(|id| self.name(*id).unwrap_or("?"))
            .collect::<Vec<_>>()
            .join(";")
    }
}
