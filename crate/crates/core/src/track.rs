//! Train-tracks: vertex classes and gates over a marked graph.
//!
//! A class lists its member vertices together with an offset `h`: the class
//! contains the tree vertex `h · ṽ` (and its translates by the class
//! stabilizer). Gates list quotient directions; a gate stands for the tree
//! gate containing the directions at the member lifts `h · ṽ`, so the gates
//! stored are representatives of stabilizer orbits of gates.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::fgroup::{self, Word};
use crate::graph::{Direction, GraphError, MarkedGraph, ValidationError};

mod search;
mod witness;

pub use witness::{elliptic_product_witnesses, Axis};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassMember {
    pub vertex: String,
    pub offset: Word,
}

impl ClassMember {
    pub fn plain(vertex: impl Into<String>) -> Self {
        ClassMember { vertex: vertex.into(), offset: Word::identity() }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MemberRepr {
    Plain(String),
    Offset { vertex: String, offset: Word },
}

// Members with trivial offset serialize as a bare vertex id.
impl Serialize for ClassMember {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.offset.is_empty() {
            MemberRepr::Plain(self.vertex.clone()).serialize(s)
        } else {
            MemberRepr::Offset { vertex: self.vertex.clone(), offset: self.offset.clone() }.serialize(s)
        }
    }
}

impl<'de> Deserialize<'de> for ClassMember {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(match MemberRepr::deserialize(d)? {
            MemberRepr::Plain(vertex) => ClassMember { vertex, offset: Word::identity() },
            MemberRepr::Offset { vertex, offset } => ClassMember { vertex, offset: offset.reduce() },
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexClass {
    pub id: usize,
    pub members: Vec<ClassMember>,
    pub stab_rank: usize,
    /// Generators of the class stabilizer, in the frame of the member lifts.
    /// Optional; when absent the member stabilizers are used.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stab_gens: Vec<Word>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateStab {
    Trivial,
    Cyclic,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub id: usize,
    pub class: usize,
    pub members: Vec<Direction>,
    pub stab: GateStab,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainTrack {
    pub graph: MarkedGraph,
    pub classes: Vec<VertexClass>,
    pub gates: Vec<Gate>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Turn {
    Pair(Direction, Direction),
    /// A direction against a stabilizer translate of itself.
    SelfTurn(Direction),
}

impl fmt::Display for Turn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Turn::Pair(a, b) => write!(f, "({a}, {b})"),
            Turn::SelfTurn(a) => write!(f, "({a}, g·{a})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TrackValidationError {
    #[error(transparent)]
    Graph(#[from] ValidationError),
    #[error("malformed track: {0}")]
    Malformed(String),
    #[error("partition gap: {0}")]
    PartitionGap(String),
    #[error("gate {gate} contains {direction}, which is not based in class {class}")]
    GateCrossesClass { gate: usize, class: usize, direction: String },
    #[error("class {class} has stabilizer rank below that of member {vertex}")]
    StabRankOrder { class: usize, vertex: String },
    #[error("edge {edge} joins two equivalent vertices of class {class}")]
    Adjacency { class: usize, edge: String },
}

impl TrackValidationError {
    pub fn kind(&self) -> &'static str {
        match self {
            TrackValidationError::Graph(e) => e.kind(),
            TrackValidationError::Malformed(_) => "malformed",
            TrackValidationError::PartitionGap(_) => "partition_gap",
            TrackValidationError::GateCrossesClass { .. } => "gate_crosses_class",
            TrackValidationError::StabRankOrder { .. } => "stab_rank_order",
            TrackValidationError::Adjacency { .. } => "adjacency",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TrackError {
    #[error(transparent)]
    Invalid(#[from] TrackValidationError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("not admissible at vertex {vertex}")]
    NotAdmissible { vertex: String },
    #[error("invalid witness at vertex {vertex}: {reason}")]
    WitnessInvalid { vertex: String, reason: String },
    #[error("no legal loop extends the given path")]
    SearchExhausted,
    #[error("bad turn: {0}")]
    BadTurn(String),
}

/// Three pairwise inequivalent directions at a vertex and legal loops (or
/// witness elements) crossing the three turns between them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tripod {
    pub vertex: String,
    pub directions: Vec<Direction>,
    /// Stabilizer twists of the three directions (all trivial in search mode).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub twists: Vec<Word>,
    pub loops: Vec<Vec<Direction>>,
    pub words: Vec<Word>,
}

/// Witness elements, three per vertex.
pub type Witnesses = BTreeMap<String, Vec<Word>>;

impl TrainTrack {
    /// Singleton classes and singleton gates.
    pub fn discrete(g: &MarkedGraph) -> TrainTrack {
        let classes = g
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| VertexClass {
                id: i,
                members: vec![ClassMember::plain(v.id.clone())],
                stab_rank: v.stab_rank,
                stab_gens: v.stab_gens.clone(),
            })
            .collect();
        let class_of: HashMap<&str, usize> = g.vertices.iter().enumerate().map(|(i, v)| (v.id.as_str(), i)).collect();
        let mut t = TrainTrack { graph: g.clone(), classes, gates: Vec::new() };
        for d in g.all_directions() {
            let class = class_of[g.tail(&d)];
            let id = t.gates.len();
            t.gates.push(Gate { id, class, members: vec![d], stab: GateStab::Trivial });
        }
        t.canonicalize();
        t
    }

    /// Renumbers classes and gates into a canonical order: classes by their
    /// first member in vertex order, gates by class then first direction.
    pub fn canonicalize(&mut self) {
        let vpos: HashMap<String, usize> =
            self.graph.vertices.iter().enumerate().map(|(i, v)| (v.id.clone(), i)).collect();
        let dpos: HashMap<Direction, usize> =
            self.graph.all_directions().into_iter().enumerate().map(|(i, d)| (d, i)).collect();
        let vkey = |v: &str| vpos.get(v).copied().unwrap_or(usize::MAX);
        let dkey = |d: &Direction| dpos.get(d).copied().unwrap_or(usize::MAX);
        for c in &mut self.classes {
            c.members.sort_by_key(|m| vkey(&m.vertex));
        }
        let old_ids: Vec<usize> = self.classes.iter().map(|c| c.id).collect();
        let mut order: Vec<usize> = (0..self.classes.len()).collect();
        order.sort_by_key(|&i| self.classes[i].members.first().map(|m| vkey(&m.vertex)).unwrap_or(usize::MAX));
        let mut remap = HashMap::new();
        let mut classes = Vec::with_capacity(order.len());
        for (new_id, &i) in order.iter().enumerate() {
            remap.insert(old_ids[i], new_id);
            let mut c = self.classes[i].clone();
            c.id = new_id;
            classes.push(c);
        }
        self.classes = classes;
        for g in &mut self.gates {
            if let Some(&c) = remap.get(&g.class) {
                g.class = c;
            }
            g.members.sort_by_key(|d| dkey(d));
        }
        self.gates.sort_by_key(|g| (g.class, g.members.first().map(&dkey).unwrap_or(usize::MAX)));
        for (i, g) in self.gates.iter_mut().enumerate() {
            g.id = i;
        }
    }

    pub fn class_by_id(&self, id: usize) -> Option<&VertexClass> {
        self.classes.iter().find(|c| c.id == id)
    }

    pub fn gate_by_id(&self, id: usize) -> Option<&Gate> {
        self.gates.iter().find(|g| g.id == id)
    }

    /// Class id and member offset of a vertex.
    pub fn class_of(&self, v: &str) -> Option<(usize, &Word)> {
        self.classes
            .iter()
            .find_map(|c| c.members.iter().find(|m| m.vertex == v).map(|m| (c.id, &m.offset)))
    }

    pub fn gate_of(&self, d: &Direction) -> Option<usize> {
        self.gates.iter().find(|g| g.members.contains(d)).map(|g| g.id)
    }

    pub fn gates_of_class(&self, class: usize) -> Vec<&Gate> {
        self.gates.iter().filter(|g| g.class == class).collect()
    }

    pub fn gate_count(&self, class: usize) -> usize {
        self.gates.iter().filter(|g| g.class == class).count()
    }

    /// Generators of the class stabilizer in the frame of its member lifts.
    pub fn class_stab_gens(&self, class: &VertexClass) -> Vec<Word> {
        if !class.stab_gens.is_empty() {
            return class.stab_gens.clone();
        }
        let mut gens = Vec::new();
        for m in &class.members {
            if let Some(v) = self.graph.vertex(&m.vertex) {
                gens.extend(v.stab_gens.iter().map(|s| m.offset.conjugate(s)));
            }
        }
        gens
    }

    pub fn is_free_regime(&self) -> bool {
        self.classes.iter().all(|c| c.stab_rank == 0) && self.graph.vertices.iter().all(|v| v.stab_rank == 0)
    }

    pub fn validate(&self) -> Result<(), TrackValidationError> {
        self.graph.validate()?;
        let mut seen_class_ids = HashSet::new();
        let mut class_of: HashMap<&str, usize> = HashMap::new();
        for c in &self.classes {
            if !seen_class_ids.insert(c.id) {
                return Err(TrackValidationError::Malformed(format!("duplicate class id {}", c.id)));
            }
            if c.members.is_empty() {
                return Err(TrackValidationError::PartitionGap(format!("class {} is empty", c.id)));
            }
            for m in &c.members {
                if self.graph.vertex(&m.vertex).is_none() {
                    return Err(TrackValidationError::Malformed(format!("class {} names unknown vertex {}", c.id, m.vertex)));
                }
                if class_of.insert(m.vertex.as_str(), c.id).is_some() {
                    return Err(TrackValidationError::PartitionGap(format!("vertex {} lies in two classes", m.vertex)));
                }
            }
        }
        for v in &self.graph.vertices {
            if !class_of.contains_key(v.id.as_str()) {
                return Err(TrackValidationError::PartitionGap(format!("vertex {} lies in no class", v.id)));
            }
        }
        let mut seen_gate_ids = HashSet::new();
        let mut gate_of: HashMap<&Direction, usize> = HashMap::new();
        for g in &self.gates {
            if !seen_gate_ids.insert(g.id) {
                return Err(TrackValidationError::Malformed(format!("duplicate gate id {}", g.id)));
            }
            if !seen_class_ids.contains(&g.class) {
                return Err(TrackValidationError::Malformed(format!("gate {} names unknown class {}", g.id, g.class)));
            }
            if g.members.is_empty() {
                return Err(TrackValidationError::PartitionGap(format!("gate {} is empty", g.id)));
            }
            for d in &g.members {
                if !self.graph.has_direction(d) {
                    return Err(TrackValidationError::Malformed(format!("gate {} names unknown direction {d}", g.id)));
                }
                if gate_of.insert(d, g.id).is_some() {
                    return Err(TrackValidationError::PartitionGap(format!("direction {d} lies in two gates")));
                }
                if class_of[self.graph.tail(d)] != g.class {
                    return Err(TrackValidationError::GateCrossesClass { gate: g.id, class: g.class, direction: d.to_string() });
                }
            }
        }
        for d in self.graph.all_directions() {
            if !gate_of.contains_key(&d) {
                return Err(TrackValidationError::PartitionGap(format!("direction {d} lies in no gate")));
            }
        }
        for c in &self.classes {
            if !c.stab_gens.is_empty() && c.stab_gens.len() != c.stab_rank {
                return Err(TrackValidationError::Malformed(format!("class {} lists {} stabilizer generators for rank {}", c.id, c.stab_gens.len(), c.stab_rank)));
            }
            for m in &c.members {
                if self.graph.vertex(&m.vertex).unwrap().stab_rank > c.stab_rank {
                    return Err(TrackValidationError::StabRankOrder { class: c.id, vertex: m.vertex.clone() });
                }
            }
        }
        for e in &self.graph.edges {
            let (Some((cu, hu)), Some((cw, hw))) = (self.class_of(&e.from), self.class_of(&e.to)) else {
                continue;
            };
            if cu != cw {
                continue;
            }
            // lifts h_u·ũ and h_u·W_e·w̃ are both in the class iff
            // h_u·W_e·h_w^-1 stabilizes the class
            let g = hu.times(&self.graph.edge_word(&e.id)).times(&hw.inverse());
            let class = self.class_by_id(cu).unwrap();
            let stab = self.class_stab_gens(class);
            let equivalent = if stab.is_empty() { g.is_empty() } else { fgroup::in_subgroup(&g, &stab) };
            if equivalent {
                return Err(TrackValidationError::Adjacency { class: cu, edge: e.id.clone() });
            }
        }
        Ok(())
    }

    /// Classes with exactly three gates and trivial stabilizer.
    pub fn exceptional_classes(&self) -> Vec<usize> {
        self.classes.iter().filter(|c| c.stab_rank == 0 && self.gate_count(c.id) == 3).map(|c| c.id).collect()
    }

    /// Three-gate classes with nontrivial stabilizer; reported separately
    /// since they contribute positively to the index.
    pub fn three_gate_stabilized_classes(&self) -> Vec<usize> {
        self.classes.iter().filter(|c| c.stab_rank > 0 && self.gate_count(c.id) == 3).map(|c| c.id).collect()
    }

    pub fn is_legal_turn(&self, turn: &Turn) -> Result<bool, TrackError> {
        match turn {
            Turn::Pair(a, b) => {
                for d in [a, b] {
                    if !self.graph.has_direction(d) {
                        return Err(TrackError::BadTurn(format!("unknown direction {d}")));
                    }
                }
                if self.graph.tail(a) != self.graph.tail(b) {
                    return Err(TrackError::BadTurn(format!("{a} and {b} are based at different vertices")));
                }
                Ok(a != b && self.gate_of(a) != self.gate_of(b))
            }
            Turn::SelfTurn(d) => {
                if !self.graph.has_direction(d) {
                    return Err(TrackError::BadTurn(format!("unknown direction {d}")));
                }
                let (c, _) = self.class_of(self.graph.tail(d)).ok_or_else(|| TrackError::BadTurn(format!("{d} has no class")))?;
                if self.class_by_id(c).map(|c| c.stab_rank).unwrap_or(0) > 0 {
                    return Err(TrackError::Unsupported(format!(
                        "self-turn at {d}: legality against stabilizer translates is not determined by the quotient data"
                    )));
                }
                Ok(false)
            }
        }
    }
}
