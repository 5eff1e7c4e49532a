mod common;

use cgraph::graph::{ConceptGraph, ConceptId, Direction};
use cgraph::io::{graph_from_pairs, read_concepts, read_pairs, write_edges};
use common::brute::{ids, PathTable};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn check_against_brute_force(graph: &ConceptGraph) {
    let n = graph.len();
    let table = PathTable::new(graph);
    for s in 0..n {
        let sid = ConceptId(s as u32);
        for depth in 1..=3 {
            assert_eq!(
                ids(&graph.prerequisite_paths(sid, depth).unwrap().paths),
                table.prerequisites(s, depth),
                "prerequisites of {s} at depth {depth}"
            );
            for dir in [Direction::In, Direction::Out] {
                assert_eq!(
                    ids(&graph.neighbors(sid, dir, depth).unwrap().paths),
                    table.neighbors(s, dir, depth, n),
                    "{dir:?} neighbors of {s} within {depth}"
                );
            }
        }
        for t in 0..n {
            let tid = ConceptId(t as u32);
            assert_eq!(
                graph.has_path(sid, tid).unwrap(),
                table.has_path(s, t),
                "has_path {s} {t}"
            );
            let got = ids(&graph.shortest_path(sid, tid).unwrap().paths);
            assert_eq!(got, table.shortest(s, t), "shortest {s} {t}");
        }
    }
}

#[test]
fn path_queries_match_exhaustive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let n = rng.random_range(1..=10);
        let density = rng.random_range(0.05..0.4);
        let graph = if rng.random_bool(0.5) {
            random_digraph(n, density, &mut rng)
        } else {
            random_dag(n, density, rng.random())
        };
        check_against_brute_force(&graph);
    }
}

#[test]
fn complete_graph_on_six_nodes() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    check_against_brute_force(&random_digraph(6, 1.0, &mut rng));
}

#[test]
fn dag_generator_is_acyclic_and_digraphs_may_not_be() {
    assert!(random_dag(30, 0.3, 4).is_acyclic());
    let cyclic = ConceptGraph::from_parts(
        (0..3).map(concept),
        [
            (ConceptId(0), ConceptId(1)),
            (ConceptId(1), ConceptId(2)),
            (ConceptId(2), ConceptId(0)),
        ],
    )
    .unwrap();
    assert!(!cyclic.is_acyclic());
    let table = PathTable::new(&cyclic);
    assert!(table.has_path(0, 2) && cyclic.has_path(ConceptId(0), ConceptId(2)).unwrap());
    assert!(!cyclic.has_path(ConceptId(0), ConceptId(0)).unwrap());
}

#[test]
fn edge_files_round_trip() {
    let g = random_dag(15, 0.2, 9);
    let mut concepts = Vec::new();
    cgraph::io::write_concepts(&mut concepts, &g).unwrap();
    let mut edges = Vec::new();
    write_edges(&mut edges, &g).unwrap();
    let back = graph_from_pairs(
        read_concepts(&concepts[..], "test").unwrap(),
        &read_pairs(&edges[..]).unwrap(),
    )
    .unwrap();
    assert_eq!(back.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
    assert_eq!(back.len(), g.len());
}
