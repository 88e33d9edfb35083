//! Marking-preserving, edge-linear maps between marked graphs, the
//! train-tracks they induce, and carrying.
//!
//! For a source vertex `u` the lift `L(u)` records where the canonical lift
//! goes: `f(ũ) = L(u) · w̃` with `w` the image vertex. Along an edge `e` from
//! `a` to `b` with image path `P`, `W_e · L(b) = L(a) · W(P)`.

use std::collections::{BTreeMap, HashMap};

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fgroup::{self, Word};
use crate::folds::{self, Specialize};
use crate::graph::{Direction, End, MarkedGraph, ValidationError};
use crate::index::{track_index, TrackIndex};
use crate::rational::Rational;
use crate::track::{ClassMember, Gate, GateStab, TrainTrack, VertexClass};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Morphism {
    pub source: MarkedGraph,
    pub target: MarkedGraph,
    pub vertex_map: BTreeMap<String, String>,
    pub edge_map: BTreeMap<String, Vec<Direction>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum MorphismError {
    #[error("source: {0}")]
    Source(ValidationError),
    #[error("target: {0}")]
    Target(ValidationError),
    #[error("malformed morphism: {0}")]
    Malformed(String),
    #[error("image of edge {0} collapses to a point")]
    Collapse(String),
    #[error("image of edge {edge} does not run from the image of its start to the image of its end")]
    Endpoint { edge: String },
    #[error("image of edge {0} backtracks")]
    NotTight(String),
    #[error("images of marking generators are not conjugate to the generators by one element: {0}")]
    MarkingMismatch(String),
}

impl MorphismError {
    pub fn kind(&self) -> &'static str {
        match self {
            MorphismError::Source(e) | MorphismError::Target(e) => e.kind(),
            MorphismError::Malformed(_) => "malformed",
            MorphismError::Collapse(_) => "collapse",
            MorphismError::Endpoint { .. } => "endpoint",
            MorphismError::NotTight(_) => "not_tight",
            MorphismError::MarkingMismatch(_) => "marking_mismatch",
        }
    }
}

/// What a successful validation learns about the map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MorphismInfo {
    /// `c` with `image loop word = c · source word · c⁻¹`.
    pub conjugator: Word,
    pub lifts: HashMap<String, Word>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum CarryError {
    #[error(transparent)]
    Morphism(#[from] MorphismError),
    #[error("track and morphism live on different graphs")]
    GraphMismatch,
    #[error("not carried: {0}")]
    NotCarried(String),
    #[error("not an ideal carrier: index {index:?} is below candidate index {better:?}")]
    NotIdeal { index: TrackIndex, better: TrackIndex },
    #[error("no candidate carries the same target")]
    CandidateSetEmpty,
}

pub fn path_tail<'a>(g: &'a MarkedGraph, p: &[Direction]) -> Option<&'a str> {
    p.first().map(|d| g.tail(d))
}

pub fn path_head<'a>(g: &'a MarkedGraph, p: &[Direction]) -> Option<&'a str> {
    p.last().map(|d| g.head(d))
}

pub fn reverse_path(p: &[Direction]) -> Vec<Direction> {
    p.iter().rev().map(|d| d.reversed()).collect()
}

pub fn path_length(g: &MarkedGraph, p: &[Direction]) -> Rational {
    p.iter().map(|d| g.length(&d.edge)).fold(Rational::zero(), |a, b| a + b)
}

impl Morphism {
    pub fn identity(g: &MarkedGraph) -> Morphism {
        Morphism {
            source: g.clone(),
            target: g.clone(),
            vertex_map: g.vertices.iter().map(|v| (v.id.clone(), v.id.clone())).collect(),
            edge_map: g.edges.iter().map(|e| (e.id.clone(), vec![Direction::forward(e.id.clone())])).collect(),
        }
    }

    /// Image path of an oriented source edge.
    pub fn image(&self, d: &Direction) -> Vec<Direction> {
        let p = &self.edge_map[&d.edge];
        match d.end {
            End::From => p.clone(),
            End::To => reverse_path(p),
        }
    }

    pub fn image_of_path(&self, path: &[Direction]) -> Vec<Direction> {
        path.iter().flat_map(|d| self.image(d)).collect()
    }

    /// The target direction into which a source direction maps.
    pub fn image_germ(&self, d: &Direction) -> Direction {
        self.image(d)[0].clone()
    }

    pub fn validate(&self) -> Result<MorphismInfo, MorphismError> {
        self.source.validate().map_err(MorphismError::Source)?;
        self.target.validate().map_err(MorphismError::Target)?;
        let (s, t) = (&self.source, &self.target);
        for v in &s.vertices {
            let w = self.vertex_map.get(&v.id).ok_or_else(|| MorphismError::Malformed(format!("vertex {} has no image", v.id)))?;
            if t.vertex(w).is_none() {
                return Err(MorphismError::Malformed(format!("vertex {} maps to unknown vertex {w}", v.id)));
            }
        }
        for e in &s.edges {
            let p = self.edge_map.get(&e.id).ok_or_else(|| MorphismError::Malformed(format!("edge {} has no image", e.id)))?;
            if let Some(d) = p.iter().find(|d| !t.has_direction(d)) {
                return Err(MorphismError::Malformed(format!("edge {} maps through unknown edge {}", e.id, d.edge)));
            }
        }
        if self.vertex_map.len() != s.vertices.len() || self.edge_map.len() != s.edges.len() {
            return Err(MorphismError::Malformed("maps name unknown source ids".into()));
        }
        for e in &s.edges {
            let p = &self.edge_map[&e.id];
            if p.is_empty() {
                return Err(MorphismError::Collapse(e.id.clone()));
            }
            let connected = p.windows(2).all(|w| t.head(&w[0]) == t.tail(&w[1]));
            if !connected || path_tail(t, p) != Some(self.vertex_map[&e.from].as_str()) || path_head(t, p) != Some(self.vertex_map[&e.to].as_str()) {
                return Err(MorphismError::Endpoint { edge: e.id.clone() });
            }
            if p.windows(2).any(|w| w[1] == w[0].reversed()) {
                return Err(MorphismError::NotTight(e.id.clone()));
            }
        }
        self.marking_check()
    }

    fn tree_paths(&self) -> HashMap<String, Vec<Direction>> {
        let s = &self.source;
        let mut to: HashMap<String, Vec<Direction>> = HashMap::from([(s.marking.base.clone(), vec![])]);
        let mut frontier = vec![s.marking.base.clone()];
        while let Some(x) = frontier.pop() {
            for e in s.edges.iter().filter(|e| s.is_tree_edge(&e.id)) {
                for d in [Direction::forward(e.id.clone()), Direction::backward(e.id.clone())] {
                    let far = s.head(&d).to_string();
                    if s.tail(&d) == x && !to.contains_key(&far) {
                        let mut p = to[&x].clone();
                        p.push(d);
                        to.insert(far.clone(), p);
                        frontier.push(far);
                    }
                }
            }
        }
        to
    }

    fn marking_check(&self) -> Result<MorphismInfo, MorphismError> {
        let (s, t) = (&self.source, &self.target);
        let tree = self.tree_paths();
        let image_word = |p: &[Direction]| t.path_word(&self.image_of_path(p));
        let mut pairs = Vec::new();
        for e in &s.edges {
            if let Some(w) = s.marking.edge_words.get(&e.id) {
                let mut lp = tree[&e.from].clone();
                lp.push(Direction::forward(e.id.clone()));
                lp.extend(reverse_path(&tree[&e.to]));
                pairs.push((w.clone(), image_word(&lp)));
            }
        }
        let conjugator = if pairs.iter().all(|(u, v)| u.is_empty() && v.is_empty()) {
            Word::identity()
        } else {
            fgroup::common_conjugator(&pairs).ok_or_else(|| MorphismError::MarkingMismatch("no common conjugator".into()))?
        };
        let base_lift = conjugator.inverse();
        let lifts: HashMap<String, Word> =
            s.vertices.iter().map(|v| (v.id.clone(), base_lift.times(&image_word(&tree[&v.id])))).collect();
        for e in &s.edges {
            let lhs = s.edge_word(&e.id).times(&lifts[&e.to]);
            let rhs = lifts[&e.from].times(&t.path_word(&self.edge_map[&e.id]));
            if lhs != rhs {
                return Err(MorphismError::MarkingMismatch(format!("edge {} is not equivariant", e.id)));
            }
        }
        for v in &s.vertices {
            let w = t.vertex(&self.vertex_map[&v.id]).unwrap();
            for g in &v.stab_gens {
                let pulled = lifts[&v.id].inverse().times(g).times(&lifts[&v.id]);
                if !fgroup::in_subgroup(&pulled, &w.stab_gens) {
                    return Err(MorphismError::MarkingMismatch(format!("stabilizer of {} does not fix its image", v.id)));
                }
            }
        }
        Ok(MorphismInfo { conjugator, lifts })
    }

    /// The source with each edge as long as its image.
    pub fn pullback_metric(&self) -> MarkedGraph {
        let mut g = self.source.clone();
        for e in &mut g.edges {
            e.length = path_length(&self.target, &self.edge_map[&e.id]);
        }
        g
    }

    pub fn is_bijective(&self) -> bool {
        let mut hit: Vec<&String> = self.vertex_map.values().collect();
        hit.sort();
        hit.dedup();
        let mut edges: Vec<&String> = Vec::new();
        for p in self.edge_map.values() {
            if p.len() != 1 {
                return false;
            }
            edges.push(&p[0].edge);
        }
        edges.sort();
        edges.dedup();
        hit.len() == self.target.vertices.len()
            && self.vertex_map.len() == self.target.vertices.len()
            && edges.len() == self.target.edges.len()
            && self.edge_map.len() == self.target.edges.len()
    }

    /// The track on the pullback metric whose classes are fibres of the
    /// vertex map and whose gates are fibres of the germ map.
    pub fn induced_track(&self) -> Result<TrainTrack, MorphismError> {
        let info = self.validate()?;
        Ok(self.induced_track_with(&info))
    }

    pub(crate) fn induced_track_with(&self, info: &MorphismInfo) -> TrainTrack {
        let g = self.pullback_metric();
        let mut by_image: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
        for v in &g.vertices {
            let w = self.target.vertex_index(&self.vertex_map[&v.id]).unwrap();
            by_image.entry(w).or_default().push(&v.id);
        }
        let mut classes = Vec::new();
        let mut class_of: HashMap<&str, usize> = HashMap::new();
        for (w, members) in &by_image {
            let id = classes.len();
            let l0 = &info.lifts[members[0]];
            let target_vertex = &self.target.vertices[*w];
            classes.push(VertexClass {
                id,
                members: members
                    .iter()
                    .map(|u| ClassMember { vertex: u.to_string(), offset: l0.times(&info.lifts[*u].inverse()) })
                    .collect(),
                stab_rank: target_vertex.stab_rank,
                stab_gens: target_vertex.stab_gens.iter().map(|s| l0.conjugate(s)).collect(),
            });
            for u in members {
                class_of.insert(u, id);
            }
        }
        let mut gate_key: BTreeMap<(usize, Direction), Vec<Direction>> = BTreeMap::new();
        for d in g.all_directions() {
            let c = class_of[g.tail(&d)];
            gate_key.entry((c, self.image_germ(&d))).or_default().push(d);
        }
        let gates = gate_key
            .into_iter()
            .enumerate()
            .map(|(id, ((class, _), members))| Gate { id, class, members, stab: GateStab::Trivial })
            .collect();
        let mut t = TrainTrack { graph: g, classes, gates };
        t.canonicalize();
        t
    }
}

fn stab_gens_of(t: &TrainTrack, class: &VertexClass) -> Vec<Word> {
    t.class_stab_gens(class)
}

/// `g` with `h_b(u) = g · h_a(u)` (modulo the class stabilizer of `b`) for
/// every member `u` of `ca`, when all of them lie in `cb`.
fn class_translation(ca: &VertexClass, b: &TrainTrack, cb: &VertexClass) -> Option<Word> {
    let offset_in = |c: &VertexClass, v: &str| c.members.iter().find(|m| m.vertex == v).map(|m| m.offset.clone());
    let first = &ca.members[0];
    let g = offset_in(cb, &first.vertex)?.times(&first.offset.inverse());
    let stab = stab_gens_of(b, cb);
    for m in &ca.members {
        let hb = offset_in(cb, &m.vertex)?;
        let diff = hb.times(&g.times(&m.offset).inverse());
        let ok = if stab.is_empty() { diff.is_empty() } else { fgroup::in_subgroup(&diff, &stab) };
        if !ok {
            return None;
        }
    }
    Some(g)
}

/// Same classes (up to translating each class) and same gates.
pub fn tracks_equivalent(a: &TrainTrack, b: &TrainTrack) -> bool {
    if !a.graph.same_combinatorics(&b.graph) || a.classes.len() != b.classes.len() || a.gates.len() != b.gates.len() {
        return false;
    }
    for ca in &a.classes {
        let Some((cb_id, _)) = b.class_of(&ca.members[0].vertex) else { return false };
        let cb = b.class_by_id(cb_id).unwrap();
        if cb.members.len() != ca.members.len() || cb.stab_rank != ca.stab_rank || class_translation(ca, b, cb).is_none() {
            return false;
        }
    }
    let mut gb: Vec<Vec<Direction>> = b.gates.iter().map(|g| sorted_dirs(&g.members)).collect();
    gb.sort();
    let mut ga: Vec<Vec<Direction>> = a.gates.iter().map(|g| sorted_dirs(&g.members)).collect();
    ga.sort();
    ga == gb
}

fn sorted_dirs(d: &[Direction]) -> Vec<Direction> {
    let mut v = d.to_vec();
    v.sort();
    v
}

/// Finds the specialization of `t` (an exceptional class merged into another
/// class) that moves it towards `target`, if one exists.
fn next_specialization(t: &TrainTrack, target: &TrainTrack) -> Option<Specialize> {
    for cid in t.exceptional_classes() {
        let c = t.class_by_id(cid).unwrap();
        let (tid, _) = target.class_of(&c.members[0].vertex)?;
        let tc = target.class_by_id(tid).unwrap();
        if tc.members.len() == c.members.len() {
            continue;
        }
        let Some(g) = class_translation(c, target, tc) else { continue };
        // another class of t sitting inside the same target class
        for other in &t.classes {
            if other.id == cid || !tc.members.iter().any(|m| m.vertex == other.members[0].vertex) {
                continue;
            }
            let Some(g2) = class_translation(other, target, tc) else { continue };
            let mut attachment = BTreeMap::new();
            let mut ok = true;
            for gate in t.gates_of_class(cid) {
                let tg = target.gate_of(&gate.members[0]);
                let dest = t
                    .gates_of_class(other.id)
                    .into_iter()
                    .find(|og| og.members.iter().any(|d| target.gate_of(d) == tg));
                match dest {
                    Some(og) => {
                        attachment.insert(gate.id, og.id);
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                return Some(Specialize {
                    exceptional_class: cid,
                    target_class: other.id,
                    gate_attachment: attachment,
                    offset: g2.inverse().times(&g),
                });
            }
        }
    }
    None
}

/// A sequence of specializations turning `t` into `target` (same graph).
pub fn specialization_chain(t: &TrainTrack, target: &TrainTrack) -> Result<Option<Vec<Specialize>>, CarryError> {
    if !t.graph.same_combinatorics(&target.graph) {
        return Err(CarryError::GraphMismatch);
    }
    let mut cur = t.clone();
    let mut chain = Vec::new();
    loop {
        if tracks_equivalent(&cur, target) {
            return Ok(Some(chain));
        }
        let Some(m) = next_specialization(&cur, target) else { return Ok(None) };
        cur = match folds::specialize(&cur, &m) {
            Ok(next) => next,
            Err(_) => return Ok(None),
        };
        chain.push(m);
    }
}

/// The specializations showing `f` is carried by `t`.
pub fn check_carrying(t: &TrainTrack, f: &Morphism) -> Result<Vec<Specialize>, CarryError> {
    let induced = f.induced_track()?;
    if !t.graph.same_combinatorics(&f.source) {
        return Err(CarryError::GraphMismatch);
    }
    match specialization_chain(t, &induced)? {
        Some(chain) => Ok(chain),
        None => Err(CarryError::NotCarried(carry_diagnostic(t, &induced))),
    }
}

fn carry_diagnostic(t: &TrainTrack, induced: &TrainTrack) -> String {
    for g in &induced.gates {
        let tg: Vec<_> = g.members.iter().map(|d| t.gate_of(d)).collect();
        for gate in &t.gates {
            let split = gate.members.iter().map(|d| induced.gate_of(d)).collect::<std::collections::BTreeSet<_>>();
            if split.len() > 1 {
                return format!("gate {} of the track is split by the map", gate.id);
            }
        }
        let _ = tg;
    }
    for c in &t.classes {
        let images: std::collections::BTreeSet<_> = c.members.iter().map(|m| induced.class_of(&m.vertex).map(|x| x.0)).collect();
        if images.len() > 1 {
            return format!("class {} is split by the map", c.id);
        }
    }
    "the induced track is not reached by specializations".into()
}

/// Carrying plus maximality of the index among carriers of the same target.
pub fn is_ideal_carrier(t: &TrainTrack, f: &Morphism, candidates: &[(TrainTrack, Morphism)]) -> Result<TrackIndex, CarryError> {
    check_carrying(t, f)?;
    let index = track_index(t);
    let mut best: Option<TrackIndex> = None;
    for (ct, cf) in candidates {
        if cf.target != f.target || check_carrying(ct, cf).is_err() {
            continue;
        }
        let i = track_index(ct);
        best = Some(best.map_or(i, |b| b.max(i)));
    }
    let best = best.ok_or(CarryError::CandidateSetEmpty)?;
    if best > index {
        return Err(CarryError::NotIdeal { index, better: best });
    }
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, path};

    fn rose_map(a: &str, b: &str) -> Morphism {
        fixtures::morphism(MarkedGraph::rose(2), MarkedGraph::rose(2), &[("v", "v")], &[("a", a), ("b", b)])
    }

    #[test]
    fn identity_is_valid() {
        let info = Morphism::identity(&MarkedGraph::rose(2)).validate().unwrap();
        assert_eq!(info.conjugator, Word::identity());
    }

    #[test]
    fn basis_change_needs_matching_marking() {
        let f = rose_map("a+ b+", "b+");
        assert_eq!(f.validate().unwrap_err().kind(), "marking_mismatch");
        // with the source marked by {ab, b}, which is a basis
        assert!(fgroup::generates_full(&["ab".parse().unwrap(), "b".parse().unwrap()], 2));
        let mut g = f.clone();
        g.source.marking.edge_words.insert("a".into(), "ab".parse().unwrap());
        assert_eq!(g.validate().unwrap().conjugator, Word::identity());
    }

    #[test]
    fn invariant_violations() {
        let mut f = Morphism::identity(&MarkedGraph::rose(2));
        f.edge_map.insert("a".into(), vec![]);
        assert_eq!(f.validate().unwrap_err().kind(), "collapse");
        f.edge_map.insert("a".into(), path("a+ a-"));
        assert_eq!(f.validate().unwrap_err().kind(), "not_tight");
        let mut h = fixtures::theta_to_rose();
        h.vertex_map.insert("v".into(), "nowhere".into());
        assert_eq!(h.validate().unwrap_err().kind(), "malformed");
        let mut h = Morphism::identity(&MarkedGraph::theta2());
        h.edge_map.insert("e1".into(), path("e2-"));
        assert_eq!(h.validate().unwrap_err().kind(), "endpoint");
    }

    #[test]
    fn pullback_lengths() {
        let mut f = rose_map("a+ b+", "b+");
        f.source.marking.edge_words.insert("a".into(), "ab".parse().unwrap());
        let g = f.pullback_metric();
        assert_eq!(g.length("a"), Rational::from_integer(2));
        assert_eq!(g.length("b"), Rational::from_integer(1));
    }

    #[test]
    fn identity_induces_discrete_track() {
        let g = MarkedGraph::theta2();
        let t = Morphism::identity(&g).induced_track().unwrap();
        assert!(tracks_equivalent(&t, &TrainTrack::discrete(&g)));
        assert_eq!(check_carrying(&TrainTrack::discrete(&g), &Morphism::identity(&g)).unwrap(), vec![]);
    }

    #[test]
    fn theta_onto_rose_has_one_class() {
        let f = fixtures::theta_to_rose();
        let t = f.induced_track().unwrap();
        t.validate().unwrap();
        assert_eq!(t.classes.len(), 1);
        // L(u) = 1, L(v) = word of the image of the tree edge e1 = B
        let offsets: Vec<(String, String)> = t.classes[0].members.iter().map(|m| (m.vertex.clone(), m.offset.to_string())).collect();
        assert_eq!(offsets, vec![("u".into(), "".into()), ("v".into(), "b".into())]);
        let mut gates: Vec<Vec<String>> = t.gates.iter().map(|g| g.members.iter().map(|d| d.to_string()).collect()).collect();
        gates.sort();
        assert_eq!(gates, vec![vec!["e1+", "e3+"], vec!["e1-", "e2-", "e3-"], vec!["e2+"]]);
    }

    #[test]
    fn carrying_verdicts() {
        let f = fixtures::theta_to_rose();
        let discrete = TrainTrack::discrete(&f.source);
        // u has three germs at the rose vertex, v only one: no class can absorb the other
        assert!(matches!(check_carrying(&discrete, &f), Err(CarryError::NotCarried(_))));
        let t = f.induced_track().unwrap();
        assert_eq!(check_carrying(&t, &f).unwrap(), vec![]);
    }

    #[test]
    fn ideal_carrier_surrogate() {
        let rose = MarkedGraph::rose(2);
        let id = Morphism::identity(&rose);
        let d = TrainTrack::discrete(&rose);
        assert_eq!(is_ideal_carrier(&d, &id, &[(d.clone(), id.clone())]).unwrap(), TrackIndex { height: 0, geom: 1 });
        assert_eq!(is_ideal_carrier(&d, &id, &[]), Err(CarryError::CandidateSetEmpty));
        let f = fixtures::theta_to_rose();
        let t = f.induced_track().unwrap();
        assert!(matches!(is_ideal_carrier(&t, &f, &[(d, id)]), Err(CarryError::NotIdeal { .. })));
    }

    #[test]
    fn json_round_trip() {
        let f = fixtures::appendix_morphism();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(serde_json::from_str::<Morphism>(&s).unwrap(), f);
    }
}
