//! Hand-built graphs, tracks and morphisms shared by tests, the CLI and the
//! scripted scenario.

use std::collections::BTreeMap;

use crate::fgroup::Word;
use crate::graph::{Direction, Edge, Marking, MarkedGraph, Vertex};
use crate::morphism::Morphism;
use crate::rational;
use crate::track::{ClassMember, Gate, GateStab, TrainTrack, VertexClass};

/// A free-stabilizer marked graph from compact data. `edges` lists
/// `(id, from, to, length)`; edges not in `words` form the spanning tree.
pub fn graph(ambient_rank: usize, vertices: &[&str], edges: &[(&str, &str, &str, &str)], words: &[(&str, &str)]) -> MarkedGraph {
    let words: BTreeMap<String, Word> = words.iter().map(|(e, w)| (e.to_string(), w.parse().unwrap())).collect();
    MarkedGraph {
        ambient_rank,
        vertices: vertices.iter().map(|v| Vertex { id: v.to_string(), stab_rank: 0, stab_gens: vec![] }).collect(),
        edges: edges
            .iter()
            .map(|(id, from, to, len)| Edge { id: id.to_string(), from: from.to_string(), to: to.to_string(), length: rational::parse(len).unwrap() })
            .collect(),
        marking: Marking {
            base: vertices[0].to_string(),
            spanning_tree: edges.iter().filter(|e| !words.contains_key(e.0)).map(|e| e.0.to_string()).collect(),
            edge_words: words,
        },
    }
}

pub fn path(s: &str) -> Vec<Direction> {
    s.split_whitespace().map(|d| d.parse().unwrap()).collect()
}

/// A morphism whose source lengths are the pullback lengths.
pub fn morphism(source: MarkedGraph, target: MarkedGraph, vertex_map: &[(&str, &str)], edge_map: &[(&str, &str)]) -> Morphism {
    let mut f = Morphism {
        source,
        target,
        vertex_map: vertex_map.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
        edge_map: edge_map.iter().map(|(e, p)| (e.to_string(), path(p))).collect(),
    };
    f.source = f.pullback_metric();
    f
}

/// A track on `g` with the given classes (plain members) and gates.
pub fn track(g: MarkedGraph, classes: &[&[&str]], gates: &[(usize, &str)]) -> TrainTrack {
    let mut t = TrainTrack {
        classes: classes
            .iter()
            .enumerate()
            .map(|(id, m)| VertexClass { id, members: m.iter().map(|v| ClassMember::plain(*v)).collect(), stab_rank: 0, stab_gens: vec![] })
            .collect(),
        gates: gates
            .iter()
            .enumerate()
            .map(|(id, (class, m))| Gate { id, class: *class, members: path(m), stab: GateStab::Trivial })
            .collect(),
        graph: g,
    };
    t.canonicalize();
    t
}

/// The rose on `a`, `b` with the germs of `a` and `b` at the start in one gate.
pub fn rose2_folded_gate(len_a: &str, len_b: &str) -> TrainTrack {
    let g = graph(2, &["v"], &[("a", "v", "v", len_a), ("b", "v", "v", len_b)], &[("a", "a"), ("b", "b")]);
    track(g, &[&["v"]], &[(0, "a+ b+"), (0, "a-"), (0, "b-")])
}

/// THETA2 mapped onto ROSE2: `e1 ↦ B`, `e2 ↦ AB`, `e3 ↦ BB`.
pub fn theta_to_rose() -> Morphism {
    morphism(
        MarkedGraph::theta2(),
        MarkedGraph::rose(2),
        &[("u", "v"), ("v", "v")],
        &[("e1", "b-"), ("e2", "a- b-"), ("e3", "b- b-")],
    )
}

/// Two unit edges from `u` with equal images and equivalent far ends.
pub fn singular_fixture() -> Morphism {
    let s = graph(
        2,
        &["u", "p", "q"],
        &[("e1", "u", "p", "1"), ("e2", "u", "q", "1"), ("e3", "p", "u", "1"), ("e4", "q", "u", "1")],
        &[("e3", "ab"), ("e4", "b")],
    );
    morphism(
        s,
        MarkedGraph::rose(2),
        &[("u", "v"), ("p", "v"), ("q", "v")],
        &[("e1", "a+"), ("e2", "a+"), ("e3", "b+"), ("e4", "a- b+")],
    )
}

/// Source for the scripted cycle: a partial fold at `x` creates a trivalent
/// vertex whose germs all occur at `w`; a full fold then sends `r` through
/// it, and a singular fold at `y` identifies it with `w`.
pub fn appendix_morphism() -> Morphism {
    let s = graph(
        3,
        &["x", "y", "w"],
        &[
            ("p", "x", "w", "3"),
            ("q", "x", "w", "2"),
            ("r", "x", "y", "3"),
            ("s", "y", "w", "2"),
            ("t", "x", "y", "1"),
        ],
        &[("p", "abAA"), ("q", "a"), ("t", "cBBA")],
    );
    morphism(
        s,
        MarkedGraph::rose(3),
        &[("x", "v"), ("y", "v"), ("w", "v")],
        &[("p", "a+ b+ a-"), ("q", "a+ a+"), ("r", "a+ b+ b+"), ("s", "b- b-"), ("t", "c+")],
    )
}
