//! Exhaustive reference answers for path queries on small graphs.

use cgraph::graph::{ConceptGraph, ConceptId, Direction};

/// Every simple path with at least one edge, as dense node indices.
pub struct PathTable {
    pub paths: Vec<Vec<usize>>,
}

fn extend(adj: &[Vec<bool>], path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    let u = *path.last().unwrap();
    for v in 0..adj.len() {
        if adj[u][v] && !path.contains(&v) {
            path.push(v);
            out.push(path.clone());
            extend(adj, path, out);
            path.pop();
        }
    }
}

impl PathTable {
    /// The graph's ids must be `0..n`.
    pub fn new(graph: &ConceptGraph) -> Self {
        let n = graph.len();
        let mut adj = vec![vec![false; n]; n];
        for (s, t) in graph.edges() {
            adj[s.0 as usize][t.0 as usize] = true;
        }
        let mut paths = Vec::new();
        for s in 0..n {
            extend(&adj, &mut vec![s], &mut paths);
        }
        Self { paths }
    }

    fn between(&self, s: usize, t: usize) -> impl Iterator<Item = &Vec<usize>> {
        self.paths.iter().filter(move |p| p[0] == s && *p.last().unwrap() == t)
    }

    pub fn has_path(&self, s: usize, t: usize) -> bool {
        s != t && self.between(s, t).next().is_some()
    }

    pub fn shortest(&self, s: usize, t: usize) -> Vec<Vec<usize>> {
        let Some(min) = self.between(s, t).map(Vec::len).min() else {
            return Vec::new();
        };
        let mut out: Vec<Vec<usize>> = self.between(s, t).filter(|p| p.len() == min).cloned().collect();
        out.sort();
        out
    }

    pub fn prerequisites(&self, t: usize, depth: usize) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self
            .paths
            .iter()
            .filter(|p| *p.last().unwrap() == t && p.len() - 1 <= depth)
            .cloned()
            .collect();
        out.sort();
        out
    }

    /// Per reachable node, the smallest minimum-hop path read from `start`
    /// outwards, oriented along the edges.
    pub fn neighbors(&self, start: usize, dir: Direction, hops: usize, n: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for v in (0..n).filter(|&v| v != start) {
            let mut cands: Vec<Vec<usize>> = match dir {
                Direction::Out => self.between(start, v).cloned().collect(),
                Direction::In => self
                    .between(v, start)
                    .map(|p| p.iter().rev().copied().collect())
                    .collect(),
            };
            let Some(min) = cands.iter().map(Vec::len).min() else {
                continue;
            };
            if min - 1 > hops {
                continue;
            }
            cands.retain(|p| p.len() == min);
            let mut best = cands.into_iter().min().unwrap();
            if dir == Direction::In {
                best.reverse();
            }
            out.push(best);
        }
        out.sort();
        out
    }
}

pub fn ids(paths: &[Vec<ConceptId>]) -> Vec<Vec<usize>> {
    paths
        .iter()
        .map(|p| p.iter().map(|id| id.0 as usize).collect())
        .collect()
}
