//! Witness-mode admissibility: axes of given elements, read as cyclically
//! reduced loops in the graph of groups.

use std::collections::HashMap;

use super::{GateStab, TrackError, TrainTrack, Tripod, Witnesses};
use crate::fgroup::{self, Word};
use crate::graph::{Direction, MarkedGraph};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Piece {
    Edge(Direction),
    /// A vertex-group element at the current vertex, in its canonical frame.
    Elem(Word),
}

/// A cyclically reduced loop `e_1 s_1 e_2 s_2 … e_k s_k`; the turn after
/// `e_i` is between the reverse of `e_i` and `s_i · e_{i+1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Axis {
    pub edges: Vec<Direction>,
    pub twists: Vec<Word>,
}

impl Axis {
    pub fn is_hyperbolic(&self) -> bool {
        !self.edges.is_empty()
    }

    /// `(incoming reversed, outgoing, twist, vertex)` for each turn.
    pub fn turns<'a>(&'a self, g: &'a MarkedGraph) -> impl Iterator<Item = (Direction, Direction, Word, &'a str)> + 'a {
        let k = self.edges.len();
        (0..k).map(move |i| {
            let e = &self.edges[i];
            (e.reversed(), self.edges[(i + 1) % k].clone(), self.twists[i].clone(), g.head(e))
        })
    }
}

pub(crate) struct GogReader {
    gens: Vec<Word>,
    gen_paths: Vec<Vec<Piece>>,
}

fn invert(p: &[Piece]) -> Vec<Piece> {
    p.iter()
        .rev()
        .map(|x| match x {
            Piece::Edge(d) => Piece::Edge(d.reversed()),
            Piece::Elem(s) => Piece::Elem(s.inverse()),
        })
        .collect()
}

impl GogReader {
    pub fn new(g: &MarkedGraph) -> Self {
        let mut to: HashMap<&str, Vec<Direction>> = HashMap::from([(g.marking.base.as_str(), vec![])]);
        let mut frontier = vec![g.marking.base.as_str()];
        while let Some(x) = frontier.pop() {
            for e in g.edges.iter().filter(|e| g.is_tree_edge(&e.id)) {
                for (d, far) in [(Direction::forward(e.id.clone()), e.to.as_str()), (Direction::backward(e.id.clone()), e.from.as_str())] {
                    if g.tail(&d) == x && !to.contains_key(far) {
                        let mut p = to[x].clone();
                        p.push(d);
                        to.insert(far, p);
                        frontier.push(far);
                    }
                }
            }
        }
        let there = |v: &str| -> Vec<Piece> { to[v].iter().cloned().map(Piece::Edge).collect() };
        let mut gen_paths = Vec::new();
        for e in &g.edges {
            if g.marking.edge_words.contains_key(&e.id) {
                let mut p = there(&e.from);
                p.push(Piece::Edge(Direction::forward(e.id.clone())));
                p.extend(invert(&there(&e.to)));
                gen_paths.push(p);
            }
        }
        for v in &g.vertices {
            for s in &v.stab_gens {
                let mut p = there(&v.id);
                p.push(Piece::Elem(s.clone()));
                p.extend(invert(&there(&v.id)));
                gen_paths.push(p);
            }
        }
        GogReader { gens: g.marking_generators(), gen_paths }
    }

    /// The cyclically reduced graph-of-groups loop of `w`, or `None` when `w`
    /// cannot be written in the marking generators.
    pub fn axis(&self, w: &Word) -> Option<Axis> {
        let expr = fgroup::express(w, &self.gens)?;
        let mut stack: Vec<Piece> = Vec::new();
        for &l in expr.letters() {
            let p = &self.gen_paths[l.unsigned_abs() as usize - 1];
            let pieces = if l > 0 { p.clone() } else { invert(p) };
            for piece in pieces {
                push(&mut stack, piece);
            }
        }
        // normal form s_0 e_1 s_1 … e_k s_k
        let mut edges = Vec::new();
        let mut elems = vec![Word::identity()];
        for p in stack {
            match p {
                Piece::Edge(d) => {
                    edges.push(d);
                    elems.push(Word::identity());
                }
                Piece::Elem(s) => *elems.last_mut().unwrap() = s,
            }
        }
        if edges.is_empty() {
            return Some(Axis { edges, twists: vec![] });
        }
        let s0 = elems.remove(0);
        let last = elems.last_mut().unwrap();
        *last = last.times(&s0);
        let mut twists = elems;
        while edges.len() >= 2 && edges[0] == edges[edges.len() - 1].reversed() && twists[twists.len() - 1].is_empty() {
            edges.remove(0);
            edges.pop();
            let t1 = twists.remove(0);
            twists.pop();
            if let Some(l) = twists.last_mut() {
                *l = l.times(&t1);
            }
        }
        Some(Axis { edges, twists })
    }
}

fn push(stack: &mut Vec<Piece>, piece: Piece) {
    match piece {
        Piece::Elem(s) => {
            let s = s.reduce();
            if s.is_empty() {
                return;
            }
            if let Some(Piece::Elem(top)) = stack.last_mut() {
                let m = top.times(&s);
                if m.is_empty() {
                    stack.pop();
                } else {
                    *top = m;
                }
            } else {
                stack.push(Piece::Elem(s));
            }
        }
        Piece::Edge(d) => {
            if stack.last() == Some(&Piece::Edge(d.reversed())) {
                stack.pop();
            } else {
                stack.push(Piece::Edge(d));
            }
        }
    }
}

impl TrainTrack {
    /// Twisted turn legality: `(p, 1)` against `(q, s)` at one vertex lift is
    /// illegal iff `p`, `q` share a gate and `s` is trivial.
    fn twisted_legal(&self, p: &Direction, q: &Direction, s: &Word) -> bool {
        !(s.is_empty() && self.gate_of(p) == self.gate_of(q))
    }

    pub(crate) fn check_witnesses(&self, witnesses: &Witnesses) -> Result<Vec<Tripod>, TrackError> {
        if self.gates.iter().any(|g| g.stab == GateStab::Cyclic) {
            return Err(TrackError::Unsupported("witness checks need trivial gate stabilizers".into()));
        }
        let reader = GogReader::new(&self.graph);
        let mut out = Vec::new();
        for v in &self.graph.vertices {
            let invalid = |reason: String| TrackError::WitnessInvalid { vertex: v.id.clone(), reason };
            let ws = witnesses.get(&v.id).ok_or_else(|| invalid("no witnesses".into()))?;
            if ws.len() != 3 {
                return Err(invalid(format!("expected 3 witnesses, got {}", ws.len())));
            }
            let mut axes = Vec::new();
            for w in ws {
                let axis = reader.axis(w).ok_or_else(|| invalid(format!("{w} is not in the group")))?;
                if !axis.is_hyperbolic() {
                    return Err(invalid(format!("{w} is not hyperbolic")));
                }
                for (p, q, s, _) in axis.turns(&self.graph) {
                    if !self.twisted_legal(&p, &q, &s) {
                        return Err(invalid(format!("axis of {w} crosses the illegal turn ({p}, {q})")));
                    }
                }
                axes.push(axis);
            }
            // turn occurrences at v, in both orientations
            let occ: Vec<Vec<(Direction, Direction, Word)>> = axes
                .iter()
                .map(|a| {
                    a.turns(&self.graph)
                        .filter(|t| t.3 == v.id)
                        .flat_map(|(p, q, s, _)| [(p.clone(), q.clone(), s.clone()), (q, p, s.inverse())])
                        .collect()
                })
                .collect();
            let equiv = |a: &(Direction, Word), b: &(Direction, Word)| a.1 == b.1 && self.gate_of(&a.0) == self.gate_of(&b.0);
            let mut found = None;
            'search: for (x1, x2, r12) in &occ[0] {
                for (y2, x3, r23) in occ[1].iter().filter(|o| &o.0 == x2) {
                    let _ = y2;
                    let a3 = r12.times(r23);
                    for (_, _, r31) in occ[2].iter().filter(|o| &o.0 == x3 && &o.1 == x1) {
                        if !a3.times(r31).is_empty() {
                            continue;
                        }
                        let d = [(x1.clone(), Word::identity()), (x2.clone(), r12.clone()), (x3.clone(), a3.clone())];
                        if equiv(&d[0], &d[1]) || equiv(&d[1], &d[2]) || equiv(&d[2], &d[0]) {
                            continue;
                        }
                        found = Some(d);
                        break 'search;
                    }
                }
            }
            let d = found.ok_or_else(|| invalid("axes do not cross a tripod of inequivalent directions".into()))?;
            out.push(Tripod {
                vertex: v.id.clone(),
                directions: d.iter().map(|x| x.0.clone()).collect(),
                twists: d.iter().map(|x| x.1.clone()).collect(),
                loops: axes.iter().map(|a| a.edges.clone()).collect(),
                words: ws.clone(),
            });
        }
        Ok(out)
    }
}

/// Tripod witnesses for every vertex of a graph all of whose vertices carry
/// nontrivial stabilizers: at `v` with stabilizer generator `s` and first
/// direction `δ` towards `u`, the elements `δ t δ⁻¹ s^k` for `k = 1, 1, 2`,
/// where `t` is a stabilizer generator at `u`.
pub fn elliptic_product_witnesses(g: &MarkedGraph) -> Option<Witnesses> {
    let mut out = Witnesses::new();
    for v in &g.vertices {
        let s = v.stab_gens.first()?;
        let delta = g.directions_at(&v.id).into_iter().next()?;
        let far = g.vertex(g.head(&delta))?;
        let t = far.stab_gens.first()?;
        let dw = g.direction_word(&delta);
        let base = dw.conjugate(t);
        let ws = [1, 1, 2].iter().map(|&k| base.times(&s.pow(k))).collect();
        out.insert(v.id.clone(), ws);
    }
    Some(out)
}
