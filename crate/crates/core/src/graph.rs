//! Marked metric graphs: finite quotients of minimal simplicial `F_N`-trees
//! with trivial edge stabilizers and free vertex groups.
//!
//! Marking convention. Every vertex `v` has a canonical lift `ṽ` in the tree.
//! The lift of an edge `e` starting at the canonical lift of `from(e)` ends at
//! `word(e) · canonical lift of to(e)`. Spanning-tree edges have the trivial
//! word, so the canonical lifts are the ones reached from the base along the
//! spanning tree. The `stab_gens` of a vertex generate the stabilizer of its
//! canonical lift.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::fgroup::{self, Word};
use crate::rational::{self, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum End {
    /// The germ at `from`; as an oriented edge, `e` traversed forwards.
    From,
    /// The germ at `to`; as an oriented edge, `e` traversed backwards.
    To,
}

/// A direction (germ of an edge at one of its endpoints). The same value
/// doubles as an oriented edge whose initial germ is this direction.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Direction {
    pub edge: String,
    pub end: End,
}

impl Direction {
    pub fn new(edge: impl Into<String>, end: End) -> Self {
        Direction { edge: edge.into(), end }
    }

    pub fn forward(edge: impl Into<String>) -> Self {
        Direction::new(edge, End::From)
    }

    pub fn backward(edge: impl Into<String>) -> Self {
        Direction::new(edge, End::To)
    }

    pub fn reversed(&self) -> Direction {
        let end = match self.end {
            End::From => End::To,
            End::To => End::From,
        };
        Direction { edge: self.edge.clone(), end }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.end {
            End::From => '+',
            End::To => '-',
        };
        write!(f, "{}{}", self.edge, sign)
    }
}

impl fmt::Debug for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (edge, end) = match s.as_bytes().last() {
            Some(b'+') => (&s[..s.len() - 1], End::From),
            Some(b'-') => (&s[..s.len() - 1], End::To),
            _ => return Err(format!("direction {s:?} must end in '+' or '-'")),
        };
        if edge.is_empty() {
            return Err(format!("direction {s:?} has an empty edge id"));
        }
        Ok(Direction::new(edge, end))
    }
}

impl Serialize for Direction {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Direction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: String,
    pub stab_rank: usize,
    #[serde(default)]
    pub stab_gens: Vec<Word>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub id: String,
    pub from: String,
    pub to: String,
    #[serde(with = "rational")]
    pub length: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Marking {
    pub base: String,
    pub spanning_tree: Vec<String>,
    pub edge_words: BTreeMap<String, Word>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkedGraph {
    pub ambient_rank: usize,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    pub marking: Marking,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("malformed graph: {0}")]
    Malformed(String),
    #[error("edge {edge} has non-positive length {length}")]
    NonpositiveLength { edge: String, length: String },
    #[error("graph is not connected: {0}")]
    Connectivity(String),
    #[error("first Betti number {betti} plus vertex ranks {stab} differs from ambient rank {ambient}")]
    RankMismatch { betti: usize, stab: usize, ambient: usize },
    #[error("vertex {vertex} violates minimality")]
    Minimality { vertex: String },
    #[error("marking generators do not generate the free group")]
    MarkingNotSurjective,
}

impl ValidationError {
    pub fn kind(&self) -> &'static str {
        match self {
            ValidationError::Malformed(_) => "malformed",
            ValidationError::NonpositiveLength { .. } => "nonpositive_length",
            ValidationError::Connectivity(_) => "connectivity",
            ValidationError::RankMismatch { .. } => "rank_mismatch",
            ValidationError::Minimality { .. } => "minimality",
            ValidationError::MarkingNotSurjective => "marking_not_surjective",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    #[error("subdivision point {at} is not inside edge {edge}")]
    OutOfRange { edge: String, at: String },
    #[error("unknown edge {0}")]
    UnknownEdge(String),
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
    #[error("edge sequence is not a path at position {0}")]
    NotAPath(usize),
    #[error("edge path is not closed")]
    NotClosed,
    #[error("free factor system is empty")]
    EmptySystem,
}

/// A multiset of free factor ranks inside `F_N`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FreeFactorSystem {
    pub ranks: Vec<usize>,
    pub ambient_rank: usize,
}

impl FreeFactorSystem {
    /// Ranks are kept sorted in decreasing order; zero ranks are dropped.
    pub fn new(mut ranks: Vec<usize>, ambient_rank: usize) -> Self {
        ranks.retain(|&r| r > 0);
        ranks.sort_unstable_by(|a, b| b.cmp(a));
        FreeFactorSystem { ranks, ambient_rank }
    }

    pub fn empty(ambient_rank: usize) -> Self {
        FreeFactorSystem::new(Vec::new(), ambient_rank)
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn total_rank(&self) -> usize {
        self.ranks.iter().sum()
    }

    pub fn is_well_formed(&self) -> bool {
        self.total_rank() <= self.ambient_rank
    }
}

/// Graph data with a word on every edge, before a spanning tree is chosen.
#[derive(Clone, Debug)]
pub(crate) struct RawGraph {
    pub ambient_rank: usize,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    pub words: Vec<Word>,
    pub base: String,
}

impl RawGraph {
    pub fn from_graph(g: &MarkedGraph) -> Self {
        RawGraph {
            ambient_rank: g.ambient_rank,
            vertices: g.vertices.clone(),
            edges: g.edges.clone(),
            words: g.edges.iter().map(|e| g.edge_word(&e.id)).collect(),
            base: g.marking.base.clone(),
        }
    }

    /// Chooses a spanning tree (edges with trivial words first, in index
    /// order) and moves canonical lifts so tree edges get trivial words.
    ///
    /// Returns the graph and, per vertex, the translation `p` with
    /// `new canonical lift = p · old canonical lift`.
    pub fn normalize(self) -> (MarkedGraph, HashMap<String, Word>) {
        let vidx: HashMap<&str, usize> =
            self.vertices.iter().enumerate().map(|(i, v)| (v.id.as_str(), i)).collect();
        let nv = self.vertices.len();
        let mut parent: Vec<usize> = (0..nv).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let n = p[y];
                p[y] = r;
                y = n;
            }
            r
        }
        let mut order: Vec<usize> = (0..self.edges.len()).collect();
        order.sort_by_key(|&i| (!self.words[i].is_empty(), i));
        let mut in_tree = vec![false; self.edges.len()];
        for i in order {
            let a = vidx[self.edges[i].from.as_str()];
            let b = vidx[self.edges[i].to.as_str()];
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
                in_tree[i] = true;
            }
        }
        let mut pot: Vec<Option<Word>> = vec![None; nv];
        let base = vidx[self.base.as_str()];
        pot[base] = Some(Word::identity());
        let mut queue = VecDeque::from([base]);
        while let Some(x) = queue.pop_front() {
            for (i, e) in self.edges.iter().enumerate() {
                if !in_tree[i] {
                    continue;
                }
                let (a, b) = (vidx[e.from.as_str()], vidx[e.to.as_str()]);
                if a == x && pot[b].is_none() {
                    pot[b] = Some(pot[a].as_ref().unwrap().times(&self.words[i]));
                    queue.push_back(b);
                } else if b == x && pot[a].is_none() {
                    pot[a] = Some(pot[b].as_ref().unwrap().times(&self.words[i].inverse()));
                    queue.push_back(a);
                }
            }
        }
        let pot: Vec<Word> = pot.into_iter().map(|p| p.unwrap_or_default()).collect();
        let mut edge_words = BTreeMap::new();
        let mut spanning_tree = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            if in_tree[i] {
                spanning_tree.push(e.id.clone());
            } else {
                let (a, b) = (vidx[e.from.as_str()], vidx[e.to.as_str()]);
                let w = pot[a].times(&self.words[i]).times(&pot[b].inverse());
                edge_words.insert(e.id.clone(), w);
            }
        }
        let vertices: Vec<Vertex> = self
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| Vertex {
                id: v.id.clone(),
                stab_rank: v.stab_rank,
                stab_gens: v.stab_gens.iter().map(|s| pot[i].conjugate(s)).collect(),
            })
            .collect();
        let potentials = self
            .vertices
            .iter()
            .zip(pot)
            .map(|(v, p)| (v.id.clone(), p))
            .collect();
        let g = MarkedGraph {
            ambient_rank: self.ambient_rank,
            vertices,
            edges: self.edges,
            marking: Marking { base: self.base, spanning_tree, edge_words },
        };
        (g, potentials)
    }
}

fn fresh_id(used: impl Iterator<Item = String>, prefix: &str) -> String {
    let used: std::collections::HashSet<String> = used.collect();
    (1..).map(|k| format!("{prefix}{k}")).find(|c| !used.contains(c)).unwrap()
}

fn letter_name(k: usize) -> String {
    ((b'a' + (k as u8 - 1)) as char).to_string()
}

impl MarkedGraph {
    /// The rose with `n` unit loops `a, b, ...` marked by the basis.
    pub fn rose(n: usize) -> Self {
        let edges = (1..=n)
            .map(|k| Edge {
                id: letter_name(k),
                from: "v".into(),
                to: "v".into(),
                length: Rational::one(),
            })
            .collect();
        let edge_words = (1..=n).map(|k| (letter_name(k), Word::generator(k))).collect();
        MarkedGraph {
            ambient_rank: n,
            vertices: vec![Vertex { id: "v".into(), stab_rank: 0, stab_gens: vec![] }],
            edges,
            marking: Marking { base: "v".into(), spanning_tree: vec![], edge_words },
        }
    }

    /// Two vertices `u`, `v` joined by unit edges `e1, e2, e3` (all from `u`
    /// to `v`); `e1 e2^-1` reads `a` and `e1 e3^-1` reads `b`.
    pub fn theta2() -> Self {
        let edges = (1..=3)
            .map(|k| Edge {
                id: format!("e{k}"),
                from: "u".into(),
                to: "v".into(),
                length: Rational::one(),
            })
            .collect();
        let edge_words = [("e2".to_string(), "A".parse().unwrap()), ("e3".to_string(), "B".parse().unwrap())]
            .into_iter()
            .collect();
        MarkedGraph {
            ambient_rank: 2,
            vertices: vec![
                Vertex { id: "u".into(), stab_rank: 0, stab_gens: vec![] },
                Vertex { id: "v".into(), stab_rank: 0, stab_gens: vec![] },
            ],
            edges,
            marking: Marking { base: "u".into(), spanning_tree: vec!["e1".into()], edge_words },
        }
    }

    /// The graph of groups whose Bass-Serre tree realizes the factor system:
    /// a central vertex carrying the first factor, one edge to a vertex for
    /// each further factor, and a loop for each remaining basis element.
    pub fn make_rose(system: &FreeFactorSystem) -> Result<MarkedGraph, GraphError> {
        if system.is_empty() {
            return Err(GraphError::EmptySystem);
        }
        let n = system.ambient_rank;
        if !system.is_well_formed() || n > fgroup::MAX_RANK {
            return Err(ValidationError::RankMismatch {
                betti: 0,
                stab: system.total_rank(),
                ambient: n,
            }
            .into());
        }
        let mut next_letter = 1usize;
        let mut vertices = Vec::new();
        for (i, &r) in system.ranks.iter().enumerate() {
            let gens = (next_letter..next_letter + r).map(Word::generator).collect();
            next_letter += r;
            vertices.push(Vertex { id: format!("v{i}"), stab_rank: r, stab_gens: gens });
        }
        let mut edges = Vec::new();
        let mut tree = Vec::new();
        for i in 1..system.ranks.len() {
            let id = format!("t{i}");
            edges.push(Edge { id: id.clone(), from: "v0".into(), to: format!("v{i}"), length: Rational::one() });
            tree.push(id);
        }
        let mut edge_words = BTreeMap::new();
        for (j, k) in (next_letter..=n).enumerate() {
            let id = format!("x{}", j + 1);
            edges.push(Edge { id: id.clone(), from: "v0".into(), to: "v0".into(), length: Rational::one() });
            edge_words.insert(id, Word::generator(k));
        }
        let g = MarkedGraph {
            ambient_rank: n,
            vertices,
            edges,
            marking: Marking { base: "v0".into(), spanning_tree: tree, edge_words },
        };
        g.validate()?;
        Ok(g)
    }

    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.id == id)
    }

    pub fn edge_index(&self, id: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    pub fn vertex(&self, id: &str) -> Option<&Vertex> {
        self.vertices.iter().find(|v| v.id == id)
    }

    pub fn edge(&self, id: &str) -> Option<&Edge> {
        self.edges.iter().find(|e| e.id == id)
    }

    pub fn has_direction(&self, d: &Direction) -> bool {
        self.edge(&d.edge).is_some()
    }

    /// Word of an edge under the marking (trivial on spanning-tree edges).
    pub fn edge_word(&self, id: &str) -> Word {
        self.marking.edge_words.get(id).cloned().unwrap_or_default()
    }

    /// Word of an oriented edge: the edge word, inverted when traversed backwards.
    pub fn direction_word(&self, d: &Direction) -> Word {
        match d.end {
            End::From => self.edge_word(&d.edge),
            End::To => self.edge_word(&d.edge).inverse(),
        }
    }

    /// Vertex at which the direction is based (start of the oriented edge).
    pub fn tail(&self, d: &Direction) -> &str {
        let e = self.edge(&d.edge).expect("direction on unknown edge");
        match d.end {
            End::From => &e.from,
            End::To => &e.to,
        }
    }

    /// Far endpoint of the oriented edge.
    pub fn head(&self, d: &Direction) -> &str {
        self.tail(&d.reversed())
    }

    pub fn length(&self, edge: &str) -> Rational {
        self.edge(edge).map(|e| e.length).unwrap_or_else(Rational::zero)
    }

    /// Directions based at `v`, in edge order (`+` before `-` for loops).
    pub fn directions_at(&self, v: &str) -> Vec<Direction> {
        let mut out = Vec::new();
        for e in &self.edges {
            if e.from == v {
                out.push(Direction::forward(e.id.clone()));
            }
            if e.to == v {
                out.push(Direction::backward(e.id.clone()));
            }
        }
        out
    }

    /// All directions (equivalently, all oriented edges) in edge order.
    pub fn all_directions(&self) -> Vec<Direction> {
        self.edges
            .iter()
            .flat_map(|e| [Direction::forward(e.id.clone()), Direction::backward(e.id.clone())])
            .collect()
    }

    pub fn valence(&self, v: &str) -> usize {
        self.edges.iter().map(|e| (e.from == v) as usize + (e.to == v) as usize).sum()
    }

    pub fn betti(&self) -> usize {
        (self.edges.len() + 1).saturating_sub(self.vertices.len())
    }

    pub fn total_stab_rank(&self) -> usize {
        self.vertices.iter().map(|v| v.stab_rank).sum()
    }

    /// Nonzero vertex stabilizer ranks as a free factor system.
    pub fn elliptic_system(&self) -> FreeFactorSystem {
        FreeFactorSystem::new(self.vertices.iter().map(|v| v.stab_rank).collect(), self.ambient_rank)
    }

    /// Marking generators: non-tree edge words (edge order), then vertex
    /// stabilizer generators (vertex order).
    pub fn marking_generators(&self) -> Vec<Word> {
        let mut gens: Vec<Word> = self
            .edges
            .iter()
            .filter_map(|e| self.marking.edge_words.get(&e.id).cloned())
            .collect();
        for v in &self.vertices {
            gens.extend(v.stab_gens.iter().cloned());
        }
        gens
    }

    pub fn is_tree_edge(&self, id: &str) -> bool {
        self.marking.spanning_tree.iter().any(|t| t == id)
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        let malformed = |m: String| Err(ValidationError::Malformed(m));
        if self.ambient_rank == 0 || self.ambient_rank > fgroup::MAX_RANK {
            return malformed(format!("ambient rank {} out of range", self.ambient_rank));
        }
        let mut ids = std::collections::HashSet::new();
        for v in &self.vertices {
            if !ids.insert(v.id.as_str()) {
                return malformed(format!("duplicate vertex id {}", v.id));
            }
            if v.stab_gens.len() != v.stab_rank {
                return malformed(format!("vertex {} lists {} generators for rank {}", v.id, v.stab_gens.len(), v.stab_rank));
            }
        }
        let mut eids = std::collections::HashSet::new();
        for e in &self.edges {
            if !eids.insert(e.id.as_str()) {
                return malformed(format!("duplicate edge id {}", e.id));
            }
            if e.id.ends_with('+') || e.id.ends_with('-') {
                return malformed(format!("edge id {} may not end in a sign", e.id));
            }
            if !ids.contains(e.from.as_str()) || !ids.contains(e.to.as_str()) {
                return malformed(format!("edge {} has an unknown endpoint", e.id));
            }
        }
        if !ids.contains(self.marking.base.as_str()) {
            return malformed(format!("base {} is not a vertex", self.marking.base));
        }
        for t in &self.marking.spanning_tree {
            if !eids.contains(t.as_str()) {
                return malformed(format!("spanning tree edge {t} is not an edge"));
            }
            if self.marking.edge_words.contains_key(t) {
                return malformed(format!("spanning tree edge {t} carries a word"));
            }
        }
        for e in &self.edges {
            if !self.is_tree_edge(&e.id) && !self.marking.edge_words.contains_key(&e.id) {
                return malformed(format!("edge {} is neither in the tree nor marked", e.id));
            }
        }
        for k in self.marking.edge_words.keys() {
            if !eids.contains(k.as_str()) {
                return malformed(format!("marking names unknown edge {k}"));
            }
        }
        for e in &self.edges {
            if e.length <= Rational::zero() {
                return Err(ValidationError::NonpositiveLength { edge: e.id.clone(), length: rational::format(&e.length) });
            }
        }
        // connectivity, over all edges
        let reach = |use_edge: &dyn Fn(&Edge) -> bool| {
            let mut seen = std::collections::HashSet::from([self.vertices[0].id.as_str()]);
            let mut stack = vec![self.vertices[0].id.as_str()];
            while let Some(x) = stack.pop() {
                for e in self.edges.iter().filter(|e| use_edge(e)) {
                    for (a, b) in [(&e.from, &e.to), (&e.to, &e.from)] {
                        if a == x && seen.insert(b.as_str()) {
                            stack.push(b.as_str());
                        }
                    }
                }
            }
            seen.len()
        };
        if self.vertices.is_empty() {
            return malformed("graph has no vertices".into());
        }
        if reach(&|_| true) != self.vertices.len() {
            return Err(ValidationError::Connectivity("some vertex is unreachable".into()));
        }
        if self.marking.spanning_tree.len() + 1 != self.vertices.len()
            || reach(&|e| self.is_tree_edge(&e.id)) != self.vertices.len()
        {
            return malformed("spanning_tree is not a spanning tree".into());
        }
        let betti = self.betti();
        let stab = self.total_stab_rank();
        if betti + stab != self.ambient_rank {
            return Err(ValidationError::RankMismatch { betti, stab, ambient: self.ambient_rank });
        }
        if self.edges.is_empty() {
            return Err(ValidationError::Minimality { vertex: self.vertices[0].id.clone() });
        }
        for v in &self.vertices {
            if self.valence(&v.id) <= 1 && v.stab_rank == 0 {
                return Err(ValidationError::Minimality { vertex: v.id.clone() });
            }
        }
        let gens = self.marking_generators();
        if gens.iter().any(|w| w.max_generator() > self.ambient_rank) || !fgroup::generates_full(&gens, self.ambient_rank) {
            return Err(ValidationError::MarkingNotSurjective);
        }
        Ok(())
    }

    pub fn volume(&self) -> Rational {
        self.edges.iter().map(|e| e.length).sum()
    }

    pub fn fresh_vertex_id(&self) -> String {
        fresh_id(self.vertices.iter().map(|v| v.id.clone()), "v")
    }

    pub fn fresh_edge_id(&self) -> String {
        fresh_id(self.edges.iter().map(|e| e.id.clone()), "e")
    }

    /// Splits `edge` at distance `at` from its `from` end. The first half
    /// keeps the edge id; the returned ids are the new vertex and new edge.
    pub fn subdivide(&self, edge: &str, at: Rational) -> Result<(MarkedGraph, String, String), GraphError> {
        self.split_edge(edge, at, true)
    }

    /// Like [`subdivide`](Self::subdivide); `keep_first = false` lets the
    /// second half (ending at `to`) keep the original id instead.
    pub(crate) fn split_edge(
        &self,
        edge: &str,
        at: Rational,
        keep_first: bool,
    ) -> Result<(MarkedGraph, String, String), GraphError> {
        let idx = self.edge_index(edge).ok_or_else(|| GraphError::UnknownEdge(edge.to_string()))?;
        let old = self.edges[idx].clone();
        if at <= Rational::zero() || at >= old.length {
            return Err(GraphError::OutOfRange { edge: edge.to_string(), at: rational::format(&at) });
        }
        let mut raw = RawGraph::from_graph(self);
        let mid = self.fresh_vertex_id();
        let new_edge = self.fresh_edge_id();
        raw.vertices.push(Vertex { id: mid.clone(), stab_rank: 0, stab_gens: vec![] });
        let word = raw.words[idx].clone();
        let (first_id, second_id) = if keep_first { (old.id.clone(), new_edge.clone()) } else { (new_edge.clone(), old.id.clone()) };
        let first = Edge { id: first_id, from: old.from.clone(), to: mid.clone(), length: at };
        let second = Edge { id: second_id, from: mid.clone(), to: old.to.clone(), length: old.length - at };
        // the half keeping the id keeps the word so non-tree edges stay non-tree
        let (w1, w2) = if keep_first { (word, Word::identity()) } else { (Word::identity(), word) };
        raw.edges[idx] = first;
        raw.words[idx] = w1;
        raw.edges.insert(idx + 1, second);
        raw.words.insert(idx + 1, w2);
        let (g, _) = raw.normalize();
        Ok((g, mid, new_edge))
    }

    /// Word of a closed edge path under the marking.
    pub fn loop_word(&self, path: &[Direction]) -> Result<Word, GraphError> {
        let mut w = Word::identity();
        let mut at: Option<&str> = None;
        let mut start: Option<&str> = None;
        for (i, d) in path.iter().enumerate() {
            if self.edge(&d.edge).is_none() {
                return Err(GraphError::UnknownEdge(d.edge.clone()));
            }
            let tail = self.tail(d);
            if let Some(a) = at {
                if a != tail {
                    return Err(GraphError::NotAPath(i));
                }
            } else {
                start = Some(tail);
            }
            at = Some(self.head(d));
            w = w.times(&self.direction_word(d));
        }
        if at != start {
            return Err(GraphError::NotClosed);
        }
        Ok(w)
    }

    /// Word read along an edge path that need not be closed.
    pub fn path_word(&self, path: &[Direction]) -> Word {
        path.iter().fold(Word::identity(), |acc, d| acc.times(&self.direction_word(d)))
    }

    /// Same underlying combinatorics (ids, endpoints), ignoring lengths and marking.
    pub fn same_combinatorics(&self, other: &MarkedGraph) -> bool {
        let mut a: Vec<(&str, &str, &str)> = self.edges.iter().map(|e| (e.id.as_str(), e.from.as_str(), e.to.as_str())).collect();
        let mut b: Vec<(&str, &str, &str)> = other.edges.iter().map(|e| (e.id.as_str(), e.from.as_str(), e.to.as_str())).collect();
        a.sort();
        b.sort();
        let mut va: Vec<&str> = self.vertices.iter().map(|v| v.id.as_str()).collect();
        let mut vb: Vec<&str> = other.vertices.iter().map(|v| v.id.as_str()).collect();
        va.sort();
        vb.sort();
        a == b && va == vb
    }

    /// Graphviz rendering; a convenience with no stability guarantee.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph G {\n");
        for v in &self.vertices {
            s += &format!("  \"{}\" [label=\"{} ({})\"];\n", v.id, v.id, v.stab_rank);
        }
        for e in &self.edges {
            s += &format!("  \"{}\" -- \"{}\" [label=\"{} {}\"];\n", e.from, e.to, e.id, self.edge_word(&e.id));
        }
        s + "}\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn d(s: &str) -> Direction {
        s.parse().unwrap()
    }

    #[test]
    fn rose_and_theta_validate() {
        assert_eq!(MarkedGraph::rose(2).validate(), Ok(()));
        assert_eq!(MarkedGraph::theta2().validate(), Ok(()));
        for n in 1..=5 {
            assert_eq!(MarkedGraph::rose(n).validate(), Ok(()));
        }
    }

    #[test]
    fn rose_without_loop_is_rank_mismatch() {
        let mut g = MarkedGraph::rose(2);
        g.edges.retain(|e| e.id != "b");
        g.marking.edge_words.remove("b");
        assert_eq!(g.validate().unwrap_err().kind(), "rank_mismatch");
    }

    #[test]
    fn non_surjective_marking() {
        let mut g = MarkedGraph::rose(2);
        g.marking.edge_words.insert("b".into(), w("a"));
        assert_eq!(g.validate(), Err(ValidationError::MarkingNotSurjective));
    }

    #[test]
    fn nonpositive_length_and_disconnected() {
        let mut g = MarkedGraph::rose(2);
        g.edges[0].length = Rational::zero();
        assert_eq!(g.validate().unwrap_err().kind(), "nonpositive_length");
        let mut g = MarkedGraph::theta2();
        g.vertices.push(Vertex { id: "z".into(), stab_rank: 0, stab_gens: vec![] });
        assert_eq!(g.validate().unwrap_err().kind(), "connectivity");
    }

    #[test]
    fn trivially_stabilized_leaf_is_not_minimal() {
        let mut g = MarkedGraph::rose(2);
        g.vertices.push(Vertex { id: "w".into(), stab_rank: 0, stab_gens: vec![] });
        g.edges.push(Edge { id: "h".into(), from: "v".into(), to: "w".into(), length: Rational::one() });
        g.marking.spanning_tree.push("h".into());
        assert_eq!(g.validate(), Err(ValidationError::Minimality { vertex: "w".into() }));
    }

    #[test]
    fn volumes() {
        assert_eq!(MarkedGraph::rose(2).volume(), Rational::from_integer(2));
        assert_eq!(MarkedGraph::theta2().volume(), Rational::from_integer(3));
        let (g, _, _) = MarkedGraph::rose(2).subdivide("a", Rational::new(1, 3)).unwrap();
        assert_eq!(g.volume(), Rational::from_integer(2));
    }

    #[test]
    fn subdivide_rose() {
        let g0 = MarkedGraph::rose(2);
        let (g, mid, new_edge) = g0.subdivide("a", Rational::new(1, 2)).unwrap();
        assert_eq!(g.vertices.len(), 2);
        assert_eq!(g.validate(), Ok(()));
        assert_eq!(g.valence(&mid), 2);
        let around = [d("a+"), Direction::forward(new_edge.clone())];
        assert_eq!(g.loop_word(&around).unwrap(), w("a"));
        assert_eq!(g.loop_word(&[d("b+")]).unwrap(), w("b"));
    }

    #[test]
    fn subdivide_out_of_range() {
        let g = MarkedGraph::theta2();
        assert!(matches!(g.subdivide("e1", Rational::one()), Err(GraphError::OutOfRange { .. })));
        assert!(matches!(g.subdivide("e1", Rational::zero()), Err(GraphError::OutOfRange { .. })));
    }

    #[test]
    fn subdivide_keeps_cycle_words() {
        let g0 = MarkedGraph::theta2();
        let cycles = [vec![d("e1+"), d("e2-")], vec![d("e1+"), d("e3-")], vec![d("e2+"), d("e3-")]];
        for e in ["e1", "e2", "e3"] {
            let (g, _, ne) = g0.subdivide(e, Rational::new(1, 4)).unwrap();
            assert_eq!(g.validate(), Ok(()));
            for c in &cycles {
                let expanded: Vec<Direction> = c
                    .iter()
                    .flat_map(|x| {
                        if x.edge != e {
                            vec![x.clone()]
                        } else if x.end == End::From {
                            vec![x.clone(), Direction::forward(ne.clone())]
                        } else {
                            vec![Direction::backward(ne.clone()), x.clone()]
                        }
                    })
                    .collect();
                assert_eq!(g.loop_word(&expanded).unwrap(), g0.loop_word(c).unwrap());
            }
        }
    }

    #[test]
    fn loop_words() {
        let g = MarkedGraph::rose(2);
        assert_eq!(g.loop_word(&[d("a+")]).unwrap(), w("a"));
        assert_eq!(g.loop_word(&[d("a+"), d("b+"), d("a-")]).unwrap(), w("abA"));
        let t = MarkedGraph::theta2();
        assert_eq!(t.loop_word(&[d("e1+"), d("e2-")]).unwrap(), w("a"));
        assert_eq!(t.loop_word(&[d("e1+"), d("e1+")]), Err(GraphError::NotAPath(1)));
        assert_eq!(t.loop_word(&[d("e1+")]), Err(GraphError::NotClosed));
    }

    #[test]
    fn make_rose_shapes() {
        let g = MarkedGraph::make_rose(&FreeFactorSystem::new(vec![1], 2)).unwrap();
        assert_eq!((g.vertices.len(), g.edges.len(), g.betti(), g.total_stab_rank()), (1, 1, 1, 1));
        let g = MarkedGraph::make_rose(&FreeFactorSystem::new(vec![1, 1], 3)).unwrap();
        assert_eq!((g.vertices.len(), g.edges.len(), g.betti()), (2, 2, 1));
        assert_eq!(g.elliptic_system().ranks, vec![1, 1]);
        let err = MarkedGraph::make_rose(&FreeFactorSystem::new(vec![2], 2)).unwrap_err();
        assert_eq!(err, GraphError::Invalid(ValidationError::Minimality { vertex: "v0".into() }));
        assert_eq!(MarkedGraph::make_rose(&FreeFactorSystem::empty(2)), Err(GraphError::EmptySystem));
    }

    #[test]
    fn json_shape() {
        let g = MarkedGraph::theta2();
        let v: serde_json::Value = serde_json::to_value(&g).unwrap();
        assert_eq!(v["edges"][0]["length"], "1/1");
        assert_eq!(v["marking"]["edge_words"]["e2"], "A");
        let back: MarkedGraph = serde_json::from_value(v).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn direction_parsing() {
        assert_eq!(d("e1+"), Direction::forward("e1"));
        assert_eq!(d("x-"), Direction::backward("x"));
        assert!("e1".parse::<Direction>().is_err());
        assert!("+".parse::<Direction>().is_err());
    }
}
