//! Legal loops by breadth-first search on the legal-transition digraph.
//! Exact only when every class has trivial stabilizer.

use std::collections::{HashMap, VecDeque};

use super::{TrackError, TrainTrack, Tripod, Turn};
use crate::graph::Direction;

/// Nodes are oriented edges; `a → b` when `b` leaves the far end of `a`
/// and the turn between the reverse of `a` and `b` is legal.
pub(crate) struct LegalDigraph {
    pub dirs: Vec<Direction>,
    pub index: HashMap<Direction, usize>,
    pub next: Vec<Vec<usize>>,
}

impl LegalDigraph {
    pub fn new(t: &TrainTrack) -> Self {
        let dirs = t.graph.all_directions();
        let index: HashMap<Direction, usize> = dirs.iter().cloned().enumerate().map(|(i, d)| (d, i)).collect();
        let gate: Vec<Option<usize>> = dirs.iter().map(|d| t.gate_of(d)).collect();
        let tails: Vec<&str> = dirs.iter().map(|d| t.graph.tail(d)).collect();
        let next = dirs
            .iter()
            .map(|d| {
                let back = index[&d.reversed()];
                let head = tails[back];
                (0..dirs.len())
                    .filter(|&j| tails[j] == head && j != back && gate[j] != gate[back])
                    .collect()
            })
            .collect();
        LegalDigraph { dirs, index, next }
    }

    pub fn has_arc(&self, a: usize, b: usize) -> bool {
        self.next[a].contains(&b)
    }

    /// Shortest node path from one of `starts` to a node satisfying `goal`.
    pub fn bfs(&self, starts: &[usize], goal: impl Fn(usize) -> bool) -> Option<Vec<usize>> {
        let mut parent: Vec<Option<usize>> = vec![None; self.dirs.len()];
        let mut seen = vec![false; self.dirs.len()];
        let mut queue = VecDeque::new();
        for &s in starts {
            if !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(x) = queue.pop_front() {
            if goal(x) {
                let mut path = vec![x];
                let mut cur = x;
                while let Some(p) = parent[cur] {
                    path.push(p);
                    cur = p;
                }
                path.reverse();
                return Some(path);
            }
            for &y in &self.next[x] {
                if !seen[y] {
                    seen[y] = true;
                    parent[y] = Some(x);
                    queue.push_back(y);
                }
            }
        }
        None
    }

    fn to_dirs(&self, nodes: &[usize]) -> Vec<Direction> {
        nodes.iter().map(|&i| self.dirs[i].clone()).collect()
    }

    /// Loop whose closing turn is `(d1, d2)`: it starts along `d2` and
    /// returns through `d1`.
    pub fn loop_through(&self, d1: &Direction, d2: &Direction) -> Option<Vec<Direction>> {
        let start = self.index[d2];
        let target = self.index[&d1.reversed()];
        self.bfs(&[start], |n| n == target).map(|p| self.to_dirs(&p))
    }
}

impl TrainTrack {
    fn require_free(&self, what: &str) -> Result<(), TrackError> {
        if self.is_free_regime() {
            Ok(())
        } else {
            Err(TrackError::Unsupported(format!("{what} needs trivial class stabilizers")))
        }
    }

    /// True iff consecutive oriented edges connect and make legal turns.
    pub fn is_legal_path(&self, path: &[Direction]) -> Result<bool, TrackError> {
        for (i, w) in path.windows(2).enumerate() {
            if self.graph.head(&w[0]) != self.graph.tail(&w[1]) {
                return Err(TrackError::Graph(crate::graph::GraphError::NotAPath(i + 1)));
            }
            if !self.is_legal_turn(&Turn::Pair(w[0].reversed(), w[1].clone()))? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Closed and legal, including the turn from the last edge to the first.
    pub fn is_cyclically_legal(&self, path: &[Direction]) -> Result<bool, TrackError> {
        let (Some(first), Some(last)) = (path.first(), path.last()) else {
            return Ok(false);
        };
        if self.graph.head(last) != self.graph.tail(first) {
            return Ok(false);
        }
        Ok(self.is_legal_path(path)? && self.is_legal_turn(&Turn::Pair(last.reversed(), first.clone()))?)
    }

    pub fn legal_loop_through(&self, turn: &Turn) -> Result<Option<Vec<Direction>>, TrackError> {
        self.require_free("legal loop search")?;
        if !self.is_legal_turn(turn)? {
            return Ok(None);
        }
        let Turn::Pair(d1, d2) = turn else { return Ok(None) };
        Ok(LegalDigraph::new(self).loop_through(d1, d2))
    }

    /// A cyclically legal closed path containing `path`; with an empty path,
    /// any legal loop through `start`.
    pub fn extend_to_legal_loop(&self, start: &str, path: &[Direction]) -> Result<Vec<Direction>, TrackError> {
        self.require_free("legal loop search")?;
        let dg = LegalDigraph::new(self);
        if path.is_empty() {
            for d in self.graph.directions_at(start) {
                let s = dg.index[&d];
                if let Some(p) = dg.bfs(&[s], |n| dg.has_arc(n, s)) {
                    return Ok(dg.to_dirs(&p));
                }
            }
            return Err(TrackError::SearchExhausted);
        }
        for d in path {
            if !self.graph.has_direction(d) {
                return Err(TrackError::BadTurn(format!("unknown direction {d}")));
            }
        }
        if !self.is_legal_path(path)? {
            return Err(TrackError::BadTurn("path is not legal".into()));
        }
        if self.is_cyclically_legal(path)? {
            return Ok(path.to_vec());
        }
        let first = dg.index[&path[0]];
        let last = dg.index[path.last().unwrap()];
        let starts = dg.next[last].clone();
        match dg.bfs(&starts, |n| dg.has_arc(n, first)) {
            Some(ext) => {
                let mut out = path.to_vec();
                out.extend(dg.to_dirs(&ext));
                Ok(out)
            }
            None => Err(TrackError::SearchExhausted),
        }
    }

    pub(crate) fn search_tripod(&self, dg: &LegalDigraph, v: &str) -> Option<Tripod> {
        let dirs = self.graph.directions_at(v);
        let gates: Vec<Option<usize>> = dirs.iter().map(|d| self.gate_of(d)).collect();
        let mut memo: HashMap<(usize, usize), Option<Vec<Direction>>> = HashMap::new();
        let mut through = |i: usize, j: usize| {
            memo.entry((i, j)).or_insert_with(|| dg.loop_through(&dirs[i], &dirs[j])).clone()
        };
        let n = dirs.len();
        for i in 0..n {
            for j in i + 1..n {
                if gates[i] == gates[j] {
                    continue;
                }
                for k in j + 1..n {
                    if gates[k] == gates[i] || gates[k] == gates[j] {
                        continue;
                    }
                    let Some(l1) = through(i, j) else { continue };
                    let Some(l2) = through(j, k) else { continue };
                    let Some(l3) = through(k, i) else { continue };
                    let loops = vec![l1, l2, l3];
                    let words = loops.iter().map(|l| self.graph.path_word(l)).collect();
                    return Some(Tripod {
                        vertex: v.to_string(),
                        directions: vec![dirs[i].clone(), dirs[j].clone(), dirs[k].clone()],
                        twists: Vec::new(),
                        loops,
                        words,
                    });
                }
            }
        }
        None
    }

    /// Certifies admissibility. Without witnesses this searches for legal
    /// tripods (trivial class stabilizers only); with witnesses it checks the
    /// supplied elements instead.
    pub fn is_admissible(&self, witnesses: Option<&super::Witnesses>) -> Result<Vec<Tripod>, TrackError> {
        self.validate()?;
        if let Some(w) = witnesses {
            return self.check_witnesses(w);
        }
        if !self.is_free_regime() {
            return Err(TrackError::Unsupported(
                "admissibility search needs trivial class stabilizers; supply witnesses".into(),
            ));
        }
        let dg = LegalDigraph::new(self);
        let mut out = Vec::new();
        for v in &self.graph.vertices {
            match self.search_tripod(&dg, &v.id) {
                Some(t) => out.push(t),
                None => return Err(TrackError::NotAdmissible { vertex: v.id.clone() }),
            }
        }
        Ok(out)
    }
}
