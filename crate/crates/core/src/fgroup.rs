//! Free group words over a fixed basis and Stallings-folding utilities.
//!
//! Generators are written `a..z`, their inverses `A..Z`. Internally a letter
//! is a nonzero `i8`: `+k` is the k-th generator, `-k` its inverse.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const MAX_RANK: usize = 26;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("invalid letter {0:?} in word (expected a-z or A-Z)")]
    InvalidLetter(char),
}

#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Word(Vec<i8>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    /// Builds a word from signed letters; panics on zero or out-of-range letters.
    pub fn from_letters(letters: Vec<i8>) -> Self {
        assert!(
            letters.iter().all(|&l| l != 0 && l.unsigned_abs() as usize <= MAX_RANK),
            "letters must be nonzero and at most {MAX_RANK} in absolute value"
        );
        Word(letters)
    }

    /// The k-th generator (1-based).
    pub fn generator(k: usize) -> Self {
        Word::from_letters(vec![k as i8])
    }

    pub fn letters(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Largest generator index used by the word (0 for the identity).
    pub fn max_generator(&self) -> usize {
        self.0.iter().map(|l| l.unsigned_abs() as usize).max().unwrap_or(0)
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| -l).collect())
    }

    pub fn reduce(&self) -> Word {
        let mut out: Vec<i8> = Vec::with_capacity(self.0.len());
        for &l in &self.0 {
            if out.last() == Some(&-l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    pub fn is_reduced(&self) -> bool {
        self.0.windows(2).all(|w| w[0] != -w[1])
    }

    /// Reduced product `self * other`.
    pub fn times(&self, other: &Word) -> Word {
        let mut out = self.reduce().0;
        for &l in &other.reduce().0 {
            if out.last() == Some(&-l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    pub fn pow(&self, n: i64) -> Word {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut out = Word::identity();
        for _ in 0..n.unsigned_abs() {
            out = out.times(&base);
        }
        out
    }

    /// `self * x * self^-1`, reduced.
    pub fn conjugate(&self, x: &Word) -> Word {
        self.times(x).times(&self.inverse())
    }

    fn rotate(&self, r: usize) -> Word {
        let mut v = self.0[r..].to_vec();
        v.extend_from_slice(&self.0[..r]);
        Word(v)
    }

    /// Shortest `r` with `self = r^k`; `self` must be cyclically reduced.
    fn primitive_root(&self) -> Word {
        let n = self.0.len();
        for d in 1..=n {
            if n.is_multiple_of(d) && (0..n).all(|i| self.0[i] == self.0[i % d]) {
                return Word(self.0[..d].to_vec());
            }
        }
        self.clone()
    }
}

fn letter_char(l: i8) -> char {
    let k = l.unsigned_abs() - 1;
    if l > 0 {
        (b'a' + k) as char
    } else {
        (b'A' + k) as char
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &l in &self.0 {
            write!(f, "{}", letter_char(l))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({:?})", self.to_string())
    }
}

impl FromStr for Word {
    type Err = WordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                'a'..='z' => Ok((c as u8 - b'a' + 1) as i8),
                'A'..='Z' => Ok(-((c as u8 - b'A' + 1) as i8)),
                _ => Err(WordError::InvalidLetter(c)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Word)
    }
}

impl Mul for &Word {
    type Output = Word;
    fn mul(self, rhs: &Word) -> Word {
        self.times(rhs)
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Length first, then the serialized string.
pub fn shortlex(a: &Word, b: &Word) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.to_string().cmp(&b.to_string()))
}

pub fn reduce(w: &Word) -> Word {
    w.reduce()
}

/// Returns `(core, conjugator)` with `w = conjugator * core * conjugator^-1`
/// and `core` cyclically reduced.
pub fn cyclic_reduce(w: &Word) -> (Word, Word) {
    let r = w.reduce().0;
    let (mut i, mut j) = (0usize, r.len());
    while j >= i + 2 && r[i] == -r[j - 1] {
        i += 1;
        j -= 1;
    }
    (Word(r[i..j].to_vec()), Word(r[..i].to_vec()))
}

pub fn is_cyclically_reduced(w: &Word) -> bool {
    w.is_reduced() && (w.len() < 2 || w.0[0] != -w.0[w.len() - 1])
}

// ---------------------------------------------------------------------------
// Subgroup graphs

#[derive(Clone, Debug)]
struct FoldEdge {
    src: usize,
    dst: usize,
    letter: i8,
    /// Word in the abstract free group on the input generators.
    tag: Word,
}

/// A half-edge as `(edge index, far vertex, tag)`.
type Arc = (usize, usize, Word);

/// A based graph labeled by generators, folded to a Stallings graph.
/// Edge tags track how each folded path reads in the input generators.
#[derive(Clone, Debug)]
struct SubgroupGraph {
    edges: Vec<FoldEdge>,
}

const BASE: usize = 0;

impl SubgroupGraph {
    fn wedge(gens: &[Word]) -> Self {
        let mut edges = Vec::new();
        let mut next = 1usize;
        for (i, g) in gens.iter().enumerate() {
            let g = g.reduce();
            let n = g.len();
            let mut prev = BASE;
            for (k, &l) in g.letters().iter().enumerate() {
                let to = if k + 1 == n {
                    BASE
                } else {
                    next += 1;
                    next - 1
                };
                let tag = if k == 0 {
                    Word::generator(i + 1)
                } else {
                    Word::identity()
                };
                // store every edge with a positive letter
                if l > 0 {
                    edges.push(FoldEdge { src: prev, dst: to, letter: l, tag });
                } else {
                    edges.push(FoldEdge { src: to, dst: prev, letter: -l, tag: tag.inverse() });
                }
                prev = to;
            }
        }
        let mut g = SubgroupGraph { edges };
        g.fold();
        g
    }

    /// Half-edges at `x`: (edge index, signed label, far vertex, tag read from x).
    fn half_edges(&self, x: usize) -> Vec<(usize, i8, usize, Word)> {
        let mut out = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            if e.src == x {
                out.push((i, e.letter, e.dst, e.tag.clone()));
            }
            if e.dst == x {
                out.push((i, -e.letter, e.src, e.tag.inverse()));
            }
        }
        out
    }

    /// Two half-edges at one vertex with the same letter.
    fn find_fold(&self) -> Option<(usize, Arc, Arc)> {
        let mut verts: Vec<usize> = self.edges.iter().flat_map(|e| [e.src, e.dst]).collect();
        verts.sort_unstable();
        verts.dedup();
        for x in verts {
            let hs = self.half_edges(x);
            for a in 0..hs.len() {
                for b in a + 1..hs.len() {
                    if hs[a].1 == hs[b].1 && hs[a].0 != hs[b].0 {
                        return Some((
                            x,
                            (hs[a].0, hs[a].2, hs[a].3.clone()),
                            (hs[b].0, hs[b].2, hs[b].3.clone()),
                        ));
                    }
                }
            }
        }
        None
    }

    fn fold(&mut self) {
        while let Some((_x, (p, y1, t1), (q, y2, t2))) = self.find_fold() {
            if y1 == y2 {
                self.edges.remove(q);
                continue;
            }
            // Eliminate a non-base endpoint; gauge its edges so that the
            // deleted half-edge reads like the kept one.
            let (keep_to, merged, del, t_keep, t_del) = if y2 != BASE {
                (y1, y2, q, t1, t2)
            } else {
                (y2, y1, p, t2, t1)
            };
            let g = t_del.inverse().times(&t_keep);
            let gi = g.inverse();
            for e in self.edges.iter_mut() {
                if e.src == merged {
                    e.tag = gi.times(&e.tag);
                }
                if e.dst == merged {
                    e.tag = e.tag.times(&g);
                }
            }
            self.edges.remove(del);
            for e in self.edges.iter_mut() {
                if e.src == merged {
                    e.src = keep_to;
                }
                if e.dst == merged {
                    e.dst = keep_to;
                }
            }
        }
    }

    fn is_full_rose(&self, n: usize) -> bool {
        if self.edges.len() != n {
            return false;
        }
        let mut seen = vec![false; n + 1];
        for e in &self.edges {
            if e.src != BASE || e.dst != BASE || e.letter as usize > n || seen[e.letter as usize] {
                return false;
            }
            seen[e.letter as usize] = true;
        }
        true
    }

    /// Reads `w` from the base; returns the product of tags when it closes up.
    fn read(&self, w: &Word) -> Option<Word> {
        let mut at = BASE;
        let mut tag = Word::identity();
        for &l in w.reduce().letters() {
            let (_, _, to, t) = self.half_edges(at).into_iter().find(|h| h.1 == l)?;
            at = to;
            tag = tag.times(&t);
        }
        (at == BASE).then_some(tag)
    }
}

/// True iff `ws` generates all of `F_n`.
pub fn generates_full(ws: &[Word], n: usize) -> bool {
    if n == 0 || n > MAX_RANK || ws.iter().any(|w| w.max_generator() > n) {
        return false;
    }
    SubgroupGraph::wedge(ws).is_full_rose(n)
}

/// Membership of `w` in the subgroup generated by `gens`.
pub fn in_subgroup(w: &Word, gens: &[Word]) -> bool {
    SubgroupGraph::wedge(gens).read(w).is_some()
}

/// Expresses `w` as a word in `gens` (letter `k` standing for `gens[k-1]`)
/// when it lies in the subgroup they generate. The result is unique when
/// `gens` is a free basis of that subgroup.
pub fn express(w: &Word, gens: &[Word]) -> Option<Word> {
    SubgroupGraph::wedge(gens).read(w)
}

/// Substitutes `images[k-1]` for letter `k` of `w`.
pub fn substitute(w: &Word, images: &[Word]) -> Word {
    w.letters().iter().fold(Word::identity(), |acc, &l| {
        let img = &images[l.unsigned_abs() as usize - 1];
        if l > 0 {
            acc.times(img)
        } else {
            acc.times(&img.inverse())
        }
    })
}

/// Shortest (then lexicographically least) `w` with `w u w^-1 = v` for all
/// pairs, or `None` if there is none.
pub fn common_conjugator(pairs: &[(Word, Word)]) -> Option<Word> {
    let pairs: Vec<(Word, Word)> = pairs.iter().map(|(u, v)| (u.reduce(), v.reduce())).collect();
    if pairs.iter().any(|(u, v)| u.is_empty() != v.is_empty()) {
        return None;
    }
    let nontrivial: Vec<&(Word, Word)> = pairs.iter().filter(|(u, _)| !u.is_empty()).collect();
    let Some((u, v)) = nontrivial.first() else {
        return Some(Word::identity());
    };
    let (ku, cu) = cyclic_reduce(u);
    let (kv, cv) = cyclic_reduce(v);
    if ku.len() != kv.len() {
        return None;
    }
    let root = ku.primitive_root();
    let bound = pairs.iter().map(|(u, v)| u.len() + v.len()).sum::<usize>() as i64 + 1;
    let cu_inv = cu.inverse();
    let mut best: Option<Word> = None;
    for r in 0..root.len() {
        if ku.rotate(r) != kv {
            continue;
        }
        // ku = A B, kv = B A, and A^-1 ku A = kv
        let x0 = Word(ku.0[..r].to_vec()).inverse();
        for n in -bound..=bound {
            let w = cv.times(&x0).times(&root.pow(n)).times(&cu_inv);
            if nontrivial.iter().all(|(a, b)| w.conjugate(a) == *b)
                && best.as_ref().is_none_or(|b| shortlex(&w, b) == Ordering::Less)
            {
                best = Some(w);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(w("aA").reduce(), w(""));
        assert_eq!(w("abBA").reduce(), w(""));
        assert_eq!(w("abAB").reduce(), w("abAB"));
    }

    #[test]
    fn parse_rejects_non_letters() {
        assert_eq!("a1".parse::<Word>(), Err(WordError::InvalidLetter('1')));
    }

    #[test]
    fn cyclic_reduce_examples() {
        assert_eq!(cyclic_reduce(&w("Aba")), (w("b"), w("A")));
        assert_eq!(cyclic_reduce(&w("ab")), (w("ab"), w("")));
        let x = w("aBAAba");
        let (core, c) = cyclic_reduce(&x);
        assert_eq!(c.times(&core).times(&c.inverse()), x.reduce());
        assert!(is_cyclically_reduced(&core));
        // first and last letters are both `a`, so nothing strips
        assert_eq!(core, w("aBAAba"));
        assert_eq!(c, w(""));
    }

    #[test]
    fn cyclic_reduce_of_trivial() {
        assert_eq!(cyclic_reduce(&w("abBA")), (w(""), w("")));
    }

    #[test]
    fn generates_full_examples() {
        assert!(generates_full(&[w("a"), w("b")], 2));
        assert!(!generates_full(&[w("a"), w("a")], 2));
        assert!(generates_full(&[w("ab"), w("b")], 2));
        assert!(!generates_full(&[w("aa"), w("b")], 2));
        assert!(!generates_full(&[w("a"), w("b")], 3));
        assert!(generates_full(&[w("abA"), w("a"), w("c")], 3));
        assert!(!generates_full(&[w("ab"), w("ba")], 2));
    }

    #[test]
    fn express_in_basis() {
        let basis = [w("ab"), w("b")];
        let e = express(&w("a"), &basis).unwrap();
        assert_eq!(e, w("aB"));
        assert_eq!(substitute(&e, &basis), w("a"));
        let x = w("abbAB");
        let e = express(&x, &basis).unwrap();
        assert_eq!(substitute(&e, &basis), x);
        assert!(express(&w("a"), &[w("aa")]).is_none());
    }

    #[test]
    fn membership() {
        assert!(in_subgroup(&w("aaaa"), &[w("aa")]));
        assert!(!in_subgroup(&w("a"), &[w("aa")]));
        assert!(in_subgroup(&w("bAAB"), &[w("baB")]));
    }

    #[test]
    fn common_conjugator_examples() {
        assert_eq!(common_conjugator(&[(w("a"), w("a")), (w("b"), w("b"))]), Some(w("")));
        assert_eq!(common_conjugator(&[(w("a"), w("Bab"))]), Some(w("B")));
        assert_eq!(w("B").conjugate(&w("a")), w("Bab"));
        assert_eq!(common_conjugator(&[(w("a"), w("b"))]), None);
        assert_eq!(common_conjugator(&[(w("a"), w("Bab")), (w("b"), w("b"))]), Some(w("B")));
        assert_eq!(common_conjugator(&[(w("a"), w("Bab")), (w("b"), w("a"))]), None);
        assert_eq!(common_conjugator(&[(w(""), w(""))]), Some(w("")));
        assert_eq!(common_conjugator(&[(w(""), w("a"))]), None);
    }

    #[test]
    fn common_conjugator_with_powers() {
        // any conjugator of a^2 to a^2 lies in <a>; the shortest is the identity
        assert_eq!(common_conjugator(&[(w("aa"), w("aa"))]), Some(w("")));
        let c = w("bAb");
        let pairs = [(w("ab"), c.conjugate(&w("ab"))), (w("bbA"), c.conjugate(&w("bbA")))];
        let found = common_conjugator(&pairs).unwrap();
        assert_eq!(found, c);
    }
}
