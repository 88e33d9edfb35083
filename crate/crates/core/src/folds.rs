//! Specialization and the three folds, as checked transformations of a
//! train-track that can also push a carrying morphism forward.
//!
//! Fold parameters name oriented edges `e1`, `e2` leaving the common vertex
//! `v`; `v1`, `v2` are their far ends.

use std::collections::{BTreeMap, HashMap};

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fgroup::Word;
use crate::graph::{Direction, Edge, End, MarkedGraph, RawGraph, Vertex};
use crate::morphism::{path_length, reverse_path, Morphism};
use crate::rational::Rational;
use crate::track::{ClassMember, TrackValidationError, TrainTrack, VertexClass};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Specialize {
    pub exceptional_class: usize,
    pub target_class: usize,
    #[serde(deserialize_with = "attachment_from_json")]
    pub gate_attachment: BTreeMap<usize, usize>,
    /// Translation placing the exceptional class next to the target class:
    /// member offsets `h` become `offset · h`.
    #[serde(default, skip_serializing_if = "Word::is_empty")]
    pub offset: Word,
}

// Object keys arrive as strings once the move is buffered by the tagged enum.
fn attachment_from_json<'de, D: serde::Deserializer<'de>>(d: D) -> Result<BTreeMap<usize, usize>, D::Error> {
    let raw = BTreeMap::<String, usize>::deserialize(d)?;
    raw.into_iter()
        .map(|(k, v)| k.parse::<usize>().map(|k| (k, v)).map_err(serde::de::Error::custom))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FoldMove {
    Specialize(Specialize),
    Singular {
        e1: Direction,
        e2: Direction,
    },
    Partial {
        e1: Direction,
        e2: Direction,
        #[serde(with = "crate::rational")]
        fold_length: Rational,
    },
    Full {
        e1: Direction,
        e2: Direction,
        special_gate: usize,
    },
}

impl FoldMove {
    pub fn is_fold(&self) -> bool {
        !matches!(self, FoldMove::Specialize(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IllegalKind {
    UnknownId,
    NotExceptional,
    BadAttachment,
    AdjacencyCreated,
    NotSameGate,
    EndpointsInequivalent,
    LengthMismatch,
    SameEdge,
    BadLength,
    NotShorter,
    GateWrongClass,
    InvalidResult,
}

impl IllegalKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            IllegalKind::UnknownId => "unknown_id",
            IllegalKind::NotExceptional => "not_exceptional",
            IllegalKind::BadAttachment => "bad_attachment",
            IllegalKind::AdjacencyCreated => "adjacency_created",
            IllegalKind::NotSameGate => "not_same_gate",
            IllegalKind::EndpointsInequivalent => "endpoints_inequivalent",
            IllegalKind::LengthMismatch => "length_mismatch",
            IllegalKind::SameEdge => "same_edge",
            IllegalKind::BadLength => "bad_length",
            IllegalKind::NotShorter => "not_shorter",
            IllegalKind::GateWrongClass => "gate_wrong_class",
            IllegalKind::InvalidResult => "invalid_result",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum FoldError {
    #[error("illegal move ({}): {detail}", kind.as_str())]
    Illegal { kind: IllegalKind, detail: String },
    #[error("morphism does not factor through the move: {0}")]
    Inconsistent(String),
}

impl FoldError {
    pub fn kind(&self) -> &'static str {
        match self {
            FoldError::Illegal { kind, .. } => kind.as_str(),
            FoldError::Inconsistent(_) => "inconsistent",
        }
    }
}

fn illegal(kind: IllegalKind, detail: impl Into<String>) -> FoldError {
    FoldError::Illegal { kind, detail: detail.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum GraphFoldKind {
    Singular,
    Partial(Rational),
    Full,
}

/// A folded graph together with the fold map.
#[derive(Clone, Debug)]
pub(crate) struct Folded {
    pub graph: MarkedGraph,
    /// `new canonical lift = p · old canonical lift` for surviving vertices.
    pub potentials: HashMap<String, Word>,
    pub vertex_map: BTreeMap<String, String>,
    pub edge_map: BTreeMap<String, Vec<Direction>>,
    pub new_vertex: Option<String>,
    pub new_edge: Option<String>,
}

fn replace_end(e: &mut Edge, end: End, v: &str) {
    match end {
        End::From => e.from = v.to_string(),
        End::To => e.to = v.to_string(),
    }
}

/// Folds `d1`, `d2` (leaving a common vertex) in a marked graph. Checks only
/// graph-level preconditions.
pub(crate) fn fold_graph(g: &MarkedGraph, kind: GraphFoldKind, d1: &Direction, d2: &Direction) -> Result<Folded, FoldError> {
    for d in [d1, d2] {
        if !g.has_direction(d) {
            return Err(illegal(IllegalKind::UnknownId, format!("no direction {d}")));
        }
    }
    let self_fold = d1.edge == d2.edge;
    if self_fold && (!matches!(kind, GraphFoldKind::Partial(_)) || d1 == d2) {
        return Err(illegal(IllegalKind::SameEdge, format!("{d1} and {d2} lie on one edge")));
    }
    if g.tail(d1) != g.tail(d2) {
        return Err(illegal(IllegalKind::NotSameGate, format!("{d1} and {d2} leave different vertices")));
    }
    let (l1, l2) = (g.length(&d1.edge), g.length(&d2.edge));
    let (w1, w2) = (g.direction_word(d1), g.direction_word(d2));
    let v = g.tail(d1).to_string();
    let (v1, v2) = (g.head(d1).to_string(), g.head(d2).to_string());
    let mut raw = RawGraph::from_graph(g);
    let i1 = g.edge_index(&d1.edge).unwrap();
    let i2 = g.edge_index(&d2.edge).unwrap();
    let mut vertex_map: BTreeMap<String, String> = g.vertices.iter().map(|x| (x.id.clone(), x.id.clone())).collect();
    let mut edge_map: BTreeMap<String, Vec<Direction>> =
        g.edges.iter().map(|e| (e.id.clone(), vec![Direction::forward(e.id.clone())])).collect();
    // image of an edge whose `d` end was pushed along the path `pre`
    let through = |d: &Direction, pre: Vec<Direction>| -> Vec<Direction> {
        let mut p = pre;
        match d.end {
            End::From => {
                p.push(Direction::forward(d.edge.clone()));
                p
            }
            End::To => {
                let mut q = vec![Direction::forward(d.edge.clone())];
                q.extend(reverse_path(&p));
                q
            }
        }
    };
    let (mut new_vertex, mut new_edge) = (None, None);
    match kind {
        GraphFoldKind::Singular => {
            if l1 != l2 {
                return Err(illegal(IllegalKind::LengthMismatch, format!("{d1} and {d2} have different lengths")));
            }
            if v1 == v2 {
                return Err(illegal(IllegalKind::EndpointsInequivalent, "far ends lie in one orbit"));
            }
            let t = w2.inverse().times(&w1);
            let ti = t.inverse();
            raw.edges.remove(i2);
            raw.words.remove(i2);
            for (e, w) in raw.edges.iter_mut().zip(raw.words.iter_mut()) {
                let mut nw = w.clone();
                if e.from == v2 {
                    e.from = v1.clone();
                    nw = ti.times(&nw);
                }
                if e.to == v2 {
                    e.to = v1.clone();
                    nw = nw.times(&t);
                }
                *w = nw;
            }
            let gone = raw.vertices.iter().position(|x| x.id == v2).unwrap();
            let old = raw.vertices.remove(gone);
            let keep = raw.vertices.iter_mut().find(|x| x.id == v1).unwrap();
            keep.stab_rank += old.stab_rank;
            keep.stab_gens.extend(old.stab_gens.iter().map(|s| ti.conjugate(s)));
            if raw.base == v2 {
                raw.base = v1.clone();
            }
            vertex_map.insert(v2.clone(), v1.clone());
            edge_map.insert(d2.edge.clone(), match d2.end {
                End::From => vec![d1.clone()],
                End::To => vec![d1.reversed()],
            });
        }
        GraphFoldKind::Partial(len) => {
            if len <= Rational::zero() || len >= l1 || len >= l2 || (self_fold && len + len >= l1) {
                return Err(illegal(IllegalKind::BadLength, "fold length must be a proper initial segment of both edges"));
            }
            let vp = g.fresh_vertex_id();
            let c = g.fresh_edge_id();
            // a loop folded against itself keeps its middle part as a loop at v'
            for (i, d) in [(i1, d1), (i2, d2)] {
                replace_end(&mut raw.edges[i], d.end, &vp);
                raw.edges[i].length -= len;
            }
            raw.vertices.push(Vertex { id: vp.clone(), stab_rank: 0, stab_gens: vec![] });
            raw.edges.push(Edge { id: c.clone(), from: v.clone(), to: vp.clone(), length: len });
            raw.words.push(Word::identity());
            let cf = Direction::forward(c.clone());
            if self_fold {
                edge_map.insert(d1.edge.clone(), vec![cf.clone(), Direction::forward(d1.edge.clone()), cf.reversed()]);
            } else {
                edge_map.insert(d1.edge.clone(), through(d1, vec![cf.clone()]));
                edge_map.insert(d2.edge.clone(), through(d2, vec![cf]));
            }
            new_vertex = Some(vp);
            new_edge = Some(c);
        }
        GraphFoldKind::Full => {
            if l1 >= l2 {
                return Err(illegal(IllegalKind::NotShorter, format!("{d1} is not shorter than {d2}")));
            }
            replace_end(&mut raw.edges[i2], d2.end, &v1);
            raw.edges[i2].length -= l1;
            raw.words[i2] = match d2.end {
                End::From => w1.inverse().times(&w2),
                End::To => w2.inverse().times(&w1),
            };
            edge_map.insert(d2.edge.clone(), through(d2, vec![d1.clone()]));
        }
    }
    let (graph, potentials) = raw.normalize();
    Ok(Folded { graph, potentials, vertex_map, edge_map, new_vertex, new_edge })
}

fn validated(t: TrainTrack) -> Result<TrainTrack, FoldError> {
    match t.validate() {
        Ok(()) => Ok(t),
        Err(e @ TrackValidationError::Adjacency { .. }) => Err(illegal(IllegalKind::AdjacencyCreated, e.to_string())),
        Err(e) => Err(illegal(IllegalKind::InvalidResult, e.to_string())),
    }
}

pub fn specialize(t: &TrainTrack, m: &Specialize) -> Result<TrainTrack, FoldError> {
    let c = t
        .class_by_id(m.exceptional_class)
        .ok_or_else(|| illegal(IllegalKind::UnknownId, format!("no class {}", m.exceptional_class)))?;
    if !t.exceptional_classes().contains(&c.id) {
        return Err(illegal(IllegalKind::NotExceptional, format!("class {} is not exceptional", c.id)));
    }
    if m.target_class == c.id || t.class_by_id(m.target_class).is_none() {
        return Err(illegal(IllegalKind::BadAttachment, format!("bad target class {}", m.target_class)));
    }
    let own: Vec<usize> = t.gates_of_class(c.id).iter().map(|g| g.id).collect();
    if m.gate_attachment.keys().copied().collect::<Vec<_>>() != own {
        return Err(illegal(IllegalKind::BadAttachment, "attachment must name exactly the gates of the exceptional class"));
    }
    for (&from, &to) in &m.gate_attachment {
        if t.gate_by_id(to).map(|g| g.class) != Some(m.target_class) {
            return Err(illegal(IllegalKind::BadAttachment, format!("gate {from} attached to gate {to} outside the target class")));
        }
    }
    let mut out = t.clone();
    let moved: Vec<ClassMember> =
        c.members.iter().map(|x| ClassMember { vertex: x.vertex.clone(), offset: m.offset.times(&x.offset) }).collect();
    out.classes.retain(|x| x.id != c.id);
    out.classes.iter_mut().find(|x| x.id == m.target_class).unwrap().members.extend(moved);
    let mut absorbed: HashMap<usize, Vec<Direction>> = HashMap::new();
    for g in &t.gates {
        if let Some(&to) = m.gate_attachment.get(&g.id) {
            absorbed.entry(to).or_default().extend(g.members.iter().cloned());
        }
    }
    out.gates.retain(|g| !m.gate_attachment.contains_key(&g.id));
    for g in &mut out.gates {
        if let Some(extra) = absorbed.remove(&g.id) {
            g.members.extend(extra);
        }
    }
    out.canonicalize();
    validated(out)
}

fn transport_offsets(classes: &mut [VertexClass], potentials: &HashMap<String, Word>) {
    for c in classes {
        for m in &mut c.members {
            if let Some(p) = potentials.get(&m.vertex) {
                m.offset = m.offset.times(&p.inverse());
            }
        }
    }
}

fn require_same_gate(t: &TrainTrack, d1: &Direction, d2: &Direction) -> Result<(), FoldError> {
    for d in [d1, d2] {
        if !t.graph.has_direction(d) {
            return Err(illegal(IllegalKind::UnknownId, format!("no direction {d}")));
        }
    }
    if d1 == d2 {
        return Err(illegal(IllegalKind::SameEdge, format!("{d1} is folded with itself")));
    }
    if t.graph.tail(d1) != t.graph.tail(d2) || t.gate_of(d1).is_none() || t.gate_of(d1) != t.gate_of(d2) {
        return Err(illegal(IllegalKind::NotSameGate, format!("{d1} and {d2} are not one gate at one vertex")));
    }
    Ok(())
}

/// Applies a fold to the track only; returns the graph-level fold as well.
pub(crate) fn fold_track(t: &TrainTrack, m: &FoldMove) -> Result<(TrainTrack, Option<Folded>), FoldError> {
    let (d1, d2) = match m {
        FoldMove::Specialize(s) => return Ok((specialize(t, s)?, None)),
        FoldMove::Singular { e1, e2 } | FoldMove::Partial { e1, e2, .. } | FoldMove::Full { e1, e2, .. } => (e1, e2),
    };
    require_same_gate(t, d1, d2)?;
    if d1.edge == d2.edge && !matches!(m, FoldMove::Partial { .. }) {
        return Err(illegal(IllegalKind::SameEdge, format!("{d1} and {d2} lie on one edge")));
    }
    let g = &t.graph;
    let kind = match m {
        FoldMove::Singular { .. } => {
            if g.length(&d1.edge) != g.length(&d2.edge) {
                return Err(illegal(IllegalKind::LengthMismatch, format!("{d1} and {d2} have different lengths")));
            }
            let (v1, v2) = (g.head(d1), g.head(d2));
            let (c1, h1) = t.class_of(v1).unwrap();
            let (c2, h2) = t.class_of(v2).unwrap();
            let rel = h1.times(&g.direction_word(d1).inverse()).times(&g.direction_word(d2)).times(&h2.inverse());
            if c1 != c2 || !rel.is_empty() || t.gate_of(&d1.reversed()) != t.gate_of(&d2.reversed()) {
                return Err(illegal(IllegalKind::EndpointsInequivalent, format!("far ends of {d1} and {d2} are not equivalent")));
            }
            GraphFoldKind::Singular
        }
        FoldMove::Partial { fold_length, .. } => GraphFoldKind::Partial(*fold_length),
        FoldMove::Full { special_gate, .. } => {
            if g.length(&d1.edge) >= g.length(&d2.edge) {
                return Err(illegal(IllegalKind::NotShorter, format!("{d1} is not shorter than {d2}")));
            }
            let (c1, _) = t.class_of(g.head(d1)).unwrap();
            match t.gate_by_id(*special_gate) {
                Some(sg) if sg.class == c1 => {}
                _ => return Err(illegal(IllegalKind::GateWrongClass, format!("gate {special_gate} is not at the class of the far end of {d1}"))),
            }
            GraphFoldKind::Full
        }
        FoldMove::Specialize(_) => unreachable!(),
    };
    let folded = fold_graph(g, kind, d1, d2)?;
    let mut out = t.clone();
    out.graph = folded.graph.clone();
    match m {
        FoldMove::Singular { .. } => {
            let v2 = g.head(d2);
            for c in &mut out.classes {
                c.members.retain(|x| x.vertex != v2);
            }
            for gate in &mut out.gates {
                gate.members.retain(|d| d.edge != d2.edge);
            }
        }
        FoldMove::Partial { .. } => {
            let (vp, c) = (folded.new_vertex.clone().unwrap(), folded.new_edge.clone().unwrap());
            let gid = t.gate_of(d1).unwrap();
            for gate in &mut out.gates {
                gate.members.retain(|d| d != d1 && d != d2);
                if gate.id == gid {
                    gate.members.push(Direction::forward(c.clone()));
                }
            }
            let cid = out.classes.iter().map(|x| x.id).max().unwrap_or(0) + 1;
            out.classes.push(VertexClass { id: cid, members: vec![ClassMember::plain(vp)], stab_rank: 0, stab_gens: vec![] });
            let first = out.gates.iter().map(|x| x.id).max().unwrap_or(0) + 1;
            for (id, d) in (first..).zip([Direction::backward(c), d1.clone(), d2.clone()]) {
                out.gates.push(crate::track::Gate { id, class: cid, members: vec![d], stab: crate::track::GateStab::Trivial });
            }
        }
        FoldMove::Full { special_gate, .. } => {
            // the label d2 now names the new direction at v1
            for gate in &mut out.gates {
                gate.members.retain(|d| d != d2);
                if gate.id == *special_gate {
                    gate.members.push(d2.clone());
                }
            }
        }
        FoldMove::Specialize(_) => unreachable!(),
    }
    out.gates.retain(|x| !x.members.is_empty());
    transport_offsets(&mut out.classes, &folded.potentials);
    out.canonicalize();
    Ok((validated(out)?, Some(folded)))
}

/// Applies a move to a track without a morphism.
pub fn apply(t: &TrainTrack, m: &FoldMove) -> Result<TrainTrack, FoldError> {
    fold_track(t, m).map(|x| x.0)
}

fn image_oriented(d: &Direction, path: Vec<Direction>) -> Vec<Direction> {
    match d.end {
        End::From => path,
        End::To => reverse_path(&path),
    }
}

/// Applies a move and factors the morphism through it.
pub fn apply_move(t: &TrainTrack, f: &Morphism, m: &FoldMove) -> Result<(TrainTrack, Morphism), FoldError> {
    if !t.graph.same_combinatorics(&f.source) {
        return Err(FoldError::Inconsistent("morphism source is not the track graph".into()));
    }
    if m.is_fold() {
        for e in &t.graph.edges {
            if f.edge_map.get(&e.id).map(|p| path_length(&f.target, p)) != Some(e.length) {
                return Err(FoldError::Inconsistent(format!("edge {} is not as long as its image", e.id)));
            }
        }
    }
    let (t2, folded) = fold_track(t, m)?;
    let Some(folded) = folded else { return Ok((t2, f.clone())) };
    let mut g = f.clone();
    g.source = t2.graph.clone();
    g.vertex_map.retain(|v, _| t2.graph.vertex(v).is_some());
    match m {
        FoldMove::Singular { e1, e2 } => {
            if f.image(e1) != f.image(e2) {
                return Err(FoldError::Inconsistent(format!("{e1} and {e2} have different images")));
            }
            g.edge_map.remove(&e2.edge);
        }
        FoldMove::Partial { e1, e2, fold_length } => {
            let (p1, p2) = (f.image(e1), f.image(e2));
            let k = (1..p1.len().min(p2.len()))
                .find(|&k| path_length(&f.target, &p1[..k]) == *fold_length)
                .filter(|&k| p1[..k] == p2[..k])
                .ok_or_else(|| FoldError::Inconsistent("images do not share an initial segment of the fold length".into()))?;
            g.edge_map.insert(folded.new_edge.clone().unwrap(), p1[..k].to_vec());
            g.vertex_map.insert(folded.new_vertex.clone().unwrap(), f.target.head(&p1[k - 1]).to_string());
            if e1.edge == e2.edge {
                let p = &f.edge_map[&e1.edge];
                g.edge_map.insert(e1.edge.clone(), p[k..p.len() - k].to_vec());
            } else {
                g.edge_map.insert(e1.edge.clone(), image_oriented(e1, p1[k..].to_vec()));
                g.edge_map.insert(e2.edge.clone(), image_oriented(e2, p2[k..].to_vec()));
            }
        }
        FoldMove::Full { e1, e2, special_gate } => {
            let (p1, p2) = (f.image(e1), f.image(e2));
            if p2.len() <= p1.len() || p2[..p1.len()] != p1[..] {
                return Err(FoldError::Inconsistent(format!("image of {e1} is not a proper initial segment of the image of {e2}")));
            }
            let rest = p2[p1.len()..].to_vec();
            let germ = rest[0].clone();
            g.edge_map.insert(e2.edge.clone(), image_oriented(e2, rest));
            let sg = t.gate_by_id(*special_gate).unwrap();
            if f.image_germ(&sg.members[0]) != germ {
                return Err(FoldError::Inconsistent(format!("special gate {special_gate} does not continue the image of {e2}")));
            }
        }
        FoldMove::Specialize(_) => unreachable!(),
    }
    g.validate().map_err(|e| FoldError::Inconsistent(e.to_string()))?;
    Ok((t2, g))
}
