//! Geometric and GL indices, heights of free factor systems, and direction
//! counts at marked vertices of finite graphs.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{FreeFactorSystem, MarkedGraph};
use crate::track::TrainTrack;

/// `(height, geom)`, compared lexicographically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TrackIndex {
    pub height: usize,
    pub geom: i64,
}

impl TrackIndex {
    pub fn pair(&self) -> (usize, i64) {
        (self.height, self.geom)
    }
}

/// Sum over classes of `gates + 3·stab − 3`.
pub fn geom_index_track(t: &TrainTrack) -> i64 {
    t.classes.iter().map(|c| class_contribution(t, c.id)).sum()
}

pub fn class_contribution(t: &TrainTrack, class: usize) -> i64 {
    let c = t.class_by_id(class).expect("unknown class");
    t.gate_count(class) as i64 + 3 * c.stab_rank as i64 - 3
}

pub fn track_index(t: &TrainTrack) -> TrackIndex {
    TrackIndex { height: height(&t.graph.elliptic_system()), geom: geom_index_track(t) }
}

fn is_branch(g: &MarkedGraph, v: &crate::graph::Vertex) -> bool {
    g.valence(&v.id) >= 3 || v.stab_rank >= 1
}

/// Sum over branch vertices of `valence + 3·stab − 3`.
pub fn geom_index_tree(g: &MarkedGraph) -> i64 {
    g.vertices
        .iter()
        .filter(|v| is_branch(g, v))
        .map(|v| g.valence(&v.id) as i64 + 3 * v.stab_rank as i64 - 3)
        .sum()
}

/// Sum over branch vertices of `valence + 2·stab − 2`.
pub fn gl_index_tree(g: &MarkedGraph) -> i64 {
    g.vertices
        .iter()
        .filter(|v| is_branch(g, v))
        .map(|v| g.valence(&v.id) as i64 + 2 * v.stab_rank as i64 - 2)
        .sum()
}

/// Height of a free factor system: `2·Σ ranks − (number of factors)`.
///
/// Each move of the containment order (add a rank-one factor, merge two
/// factors, grow a factor by one) raises this quantity by one or two, and
/// growing can always be replaced by adding then merging, so it is the
/// length of a longest chain. The tests certify it against
/// [`height_oracle`] for every system in rank at most five.
pub fn height(a: &FreeFactorSystem) -> usize {
    2 * a.total_rank() - a.ranks.len()
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable_by(|a, b| b.cmp(a));
    v
}

/// Systems covering `a` in one move, within ambient rank `n`.
pub fn successors(a: &[usize], n: usize) -> Vec<Vec<usize>> {
    let total: usize = a.iter().sum();
    let mut out = BTreeSet::new();
    if total < n {
        let mut b = a.to_vec();
        b.push(1);
        out.insert(sorted(b));
        for i in 0..a.len() {
            let mut b = a.to_vec();
            b[i] += 1;
            out.insert(sorted(b));
        }
    }
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let mut b: Vec<usize> = a.iter().enumerate().filter(|&(k, _)| k != i && k != j).map(|(_, &r)| r).collect();
            b.push(a[i] + a[j]);
            out.insert(sorted(b));
        }
    }
    out.into_iter().collect()
}

/// Longest proper chain from the empty system to every system of ambient
/// rank `n`, by enumerating all chains from the empty system.
pub fn height_table(n: usize) -> BTreeMap<Vec<usize>, usize> {
    let mut best: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    fn walk(a: Vec<usize>, len: usize, n: usize, best: &mut BTreeMap<Vec<usize>, usize>) {
        if matches!(best.get(&a), Some(&e) if e >= len) {
            // a chain at least this long already continued from here
            return;
        }
        best.insert(a.clone(), len);
        for b in successors(&a, n) {
            walk(b, len + 1, n, best);
        }
    }
    walk(Vec::new(), 0, n, &mut best);
    best
}

/// Brute-force height, by chain enumeration.
pub fn height_oracle(a: &FreeFactorSystem) -> usize {
    height_table(a.ambient_rank.max(a.total_rank()))[&a.ranks]
}

/// All rank multisets of total at most `n` (including the empty one).
pub fn all_systems(n: usize) -> Vec<FreeFactorSystem> {
    height_table(n).keys().map(|r| FreeFactorSystem::new(r.clone(), n)).collect()
}

/// `a ⊆ b` in the containment order, decided by reachability under moves.
pub fn contained(a: &[usize], b: &[usize], n: usize) -> bool {
    if a == b {
        return true;
    }
    let mut stack = vec![a.to_vec()];
    let mut seen = BTreeSet::new();
    while let Some(x) = stack.pop() {
        for y in successors(&x, n) {
            if y.as_slice() == b {
                return true;
            }
            if seen.insert(y.clone()) {
                stack.push(y);
            }
        }
    }
    false
}

/// An abstract finite multigraph: vertices `0..vertex_count`, loops allowed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Skeleton {
    pub vertex_count: usize,
    pub edges: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DirCountError {
    #[error("graph is disconnected")]
    Disconnected,
    #[error("the marked set is empty")]
    EmptyMarking,
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DirCount {
    pub directions: usize,
    pub marked: usize,
    pub rank: usize,
    pub unmarked_leaves: usize,
    /// `directions ≤ 2(l+r−1)`; `None` unless every leaf is marked.
    pub bound_all_leaves: Option<bool>,
    /// `directions ≤ 2(l+r−1)+1`; `None` unless at most one leaf is unmarked.
    pub bound_one_unmarked_leaf: Option<bool>,
    /// `directions = 2(v+r−1)`; `None` unless every vertex is marked.
    pub euler: Option<bool>,
}

impl Skeleton {
    pub fn of(g: &MarkedGraph) -> (Skeleton, HashMap<String, usize>) {
        let idx: HashMap<String, usize> = g.vertices.iter().enumerate().map(|(i, v)| (v.id.clone(), i)).collect();
        let edges = g.edges.iter().map(|e| (idx[&e.from], idx[&e.to])).collect();
        (Skeleton { vertex_count: g.vertices.len(), edges }, idx)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().map(|&(a, b)| (a == v) as usize + (b == v) as usize).sum()
    }

    pub fn is_connected(&self) -> bool {
        if self.vertex_count == 0 {
            return false;
        }
        let mut seen = vec![false; self.vertex_count];
        seen[0] = true;
        let mut stack = vec![0];
        while let Some(x) = stack.pop() {
            for &(a, b) in &self.edges {
                for (p, q) in [(a, b), (b, a)] {
                    if p == x && !seen[q] {
                        seen[q] = true;
                        stack.push(q);
                    }
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    pub fn rank(&self) -> usize {
        (self.edges.len() + 1).saturating_sub(self.vertex_count)
    }

    /// Every connected multigraph (loops and multi-edges allowed) with at most
    /// `max_edges` edges, as labeled graphs; isomorphic copies may repeat.
    pub fn enumerate_connected(max_edges: usize) -> Vec<Skeleton> {
        let mut out = vec![Skeleton { vertex_count: 1, edges: vec![] }];
        for e in 1..=max_edges {
            for n in 1..=e + 1 {
                let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect();
                let mut chosen = Vec::with_capacity(e);
                fn rec(pairs: &[(usize, usize)], from: usize, e: usize, n: usize, chosen: &mut Vec<(usize, usize)>, out: &mut Vec<Skeleton>) {
                    if chosen.len() == e {
                        let s = Skeleton { vertex_count: n, edges: chosen.clone() };
                        if s.is_connected() {
                            out.push(s);
                        }
                        return;
                    }
                    for i in from..pairs.len() {
                        chosen.push(pairs[i]);
                        rec(pairs, i, e, n, chosen, out);
                        chosen.pop();
                    }
                }
                rec(&pairs, 0, e, n, &mut chosen, &mut out);
            }
        }
        out
    }
}

/// Directions based at marked vertices, with the bound checks that apply.
pub fn marked_direction_count(g: &Skeleton, marked: &BTreeSet<usize>) -> Result<DirCount, DirCountError> {
    if marked.is_empty() {
        return Err(DirCountError::EmptyMarking);
    }
    if let Some(&v) = marked.iter().find(|&&v| v >= g.vertex_count) {
        return Err(DirCountError::UnknownVertex(v.to_string()));
    }
    if !g.is_connected() {
        return Err(DirCountError::Disconnected);
    }
    let directions: usize = marked.iter().map(|&v| g.degree(v)).sum();
    let l = marked.len() as i64;
    let r = g.rank() as i64;
    let unmarked_leaves = (0..g.vertex_count).filter(|v| g.degree(*v) == 1 && !marked.contains(v)).count();
    let bound = 2 * (l + r - 1);
    let dirs = directions as i64;
    Ok(DirCount {
        directions,
        marked: marked.len(),
        rank: g.rank(),
        unmarked_leaves,
        bound_all_leaves: (unmarked_leaves == 0).then_some(dirs <= bound),
        bound_one_unmarked_leaf: (unmarked_leaves <= 1).then_some(dirs <= bound + 1),
        euler: (marked.len() == g.vertex_count).then(|| dirs == 2 * (g.vertex_count as i64 + r - 1)),
    })
}

/// Maximum of the candidate indices, `None` for an empty set.
pub fn max_index<'a>(indices: impl IntoIterator<Item = &'a TrackIndex>) -> Option<TrackIndex> {
    indices.into_iter().copied().max()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, Marking, Vertex};
    use num_traits::One;

    fn sys(r: &[usize], n: usize) -> FreeFactorSystem {
        FreeFactorSystem::new(r.to_vec(), n)
    }

    #[test]
    fn tree_indices() {
        let r = MarkedGraph::rose(2);
        assert_eq!((geom_index_tree(&r), gl_index_tree(&r)), (1, 2));
        let t = MarkedGraph::theta2();
        assert_eq!((geom_index_tree(&t), gl_index_tree(&t)), (0, 2));
        // K4: trivalent, 4 vertices, 6 edges, rank 3
        let vs = ["p", "q", "r", "s"];
        let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let tree = ["k0", "k1", "k2"];
        let g = MarkedGraph {
            ambient_rank: 3,
            vertices: vs.iter().map(|v| Vertex { id: v.to_string(), stab_rank: 0, stab_gens: vec![] }).collect(),
            edges: pairs
                .iter()
                .enumerate()
                .map(|(i, &(a, b))| Edge { id: format!("k{i}"), from: vs[a].into(), to: vs[b].into(), length: One::one() })
                .collect(),
            marking: Marking {
                base: "p".into(),
                spanning_tree: tree.iter().map(|s| s.to_string()).collect(),
                edge_words: [("k3", "a"), ("k4", "b"), ("k5", "c")].iter().map(|(e, w)| (e.to_string(), w.parse().unwrap())).collect(),
            },
        };
        assert_eq!(g.validate(), Ok(()));
        assert_eq!(geom_index_tree(&g), 0);
        // subdivision points are not branch points
        let (s, _, _) = r.subdivide("a", num_rational::Ratio::new(1, 2)).unwrap();
        assert_eq!(geom_index_tree(&s), 1);
    }

    #[test]
    fn track_indices() {
        let r = TrainTrack::discrete(&MarkedGraph::rose(2));
        assert_eq!(track_index(&r), TrackIndex { height: 0, geom: 1 });
        let t = TrainTrack::discrete(&MarkedGraph::theta2());
        assert_eq!(track_index(&t), TrackIndex { height: 0, geom: 0 });
        let m = TrainTrack::discrete(&MarkedGraph::make_rose(&sys(&[1, 1], 3)).unwrap());
        assert_eq!(track_index(&m), TrackIndex { height: 2, geom: 4 });
        assert!(TrackIndex { height: 1, geom: -5 } > TrackIndex { height: 0, geom: 9 });
    }

    #[test]
    fn height_values() {
        assert_eq!(height_oracle(&sys(&[], 2)), 0);
        assert_eq!(height_oracle(&sys(&[1], 2)), 1);
        assert_eq!(height_oracle(&sys(&[2], 2)), 3);
        assert_eq!(height(&sys(&[2], 2)), 3);
    }

    #[test]
    fn closed_form_height_matches_oracle() {
        for n in 1..=5 {
            let table = height_table(n);
            for (ranks, h) in &table {
                assert_eq!(height(&sys(ranks, n)), *h, "ranks {ranks:?} in rank {n}");
            }
        }
    }

    #[test]
    fn height_is_strictly_monotone() {
        let n = 4;
        let all: Vec<Vec<usize>> = height_table(n).into_keys().collect();
        for a in &all {
            for b in &all {
                if a != b && contained(a, b, n) {
                    assert!(height(&sys(a, n)) < height(&sys(b, n)));
                }
            }
        }
    }

    #[test]
    fn direction_count_examples() {
        let seg = Skeleton { vertex_count: 2, edges: vec![(0, 1)] };
        let c = marked_direction_count(&seg, &BTreeSet::from([0, 1])).unwrap();
        assert_eq!((c.directions, c.bound_all_leaves), (2, Some(true)));
        let circle = Skeleton { vertex_count: 1, edges: vec![(0, 0)] };
        let c = marked_direction_count(&circle, &BTreeSet::from([0])).unwrap();
        assert_eq!((c.directions, c.bound_all_leaves, c.euler), (2, Some(true), Some(true)));
        let c = marked_direction_count(&seg, &BTreeSet::from([0])).unwrap();
        assert_eq!((c.directions, c.bound_all_leaves, c.bound_one_unmarked_leaf), (1, None, Some(true)));
        let split = Skeleton { vertex_count: 2, edges: vec![] };
        assert_eq!(marked_direction_count(&split, &BTreeSet::from([0])), Err(DirCountError::Disconnected));
    }

    #[test]
    fn enumeration_counts_small_cases() {
        // labeled connected multigraphs with one edge: a loop on one vertex, or a segment
        let one: Vec<_> = Skeleton::enumerate_connected(1).into_iter().filter(|s| s.edges.len() == 1).collect();
        assert_eq!(one.len(), 2);
        let all = Skeleton::enumerate_connected(3);
        assert!(all.iter().all(|s| s.is_connected()));
    }
}
