//! Folding runs: move selection, audited traces, random instances and the
//! scripted specialization cycle.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::folds::{self, FoldMove, GraphFoldKind};
use crate::fgroup::Word;
use crate::graph::{Direction, Edge, End, MarkedGraph, Marking, Vertex};
use crate::index::{track_index, TrackIndex};
use crate::morphism::{path_length, reverse_path, specialization_chain, Morphism, MorphismError};
use crate::rational::Rational;
use crate::track::TrainTrack;
use crate::fixtures;

mod index_pair {
    use super::TrackIndex;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(i: &TrackIndex, s: S) -> Result<S::Ok, S::Error> {
        (i.height, i.geom).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<TrackIndex, D::Error> {
        let (height, geom) = <(usize, i64)>::deserialize(d)?;
        Ok(TrackIndex { height, geom })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    #[serde(rename = "move")]
    pub mv: FoldMove,
    #[serde(with = "index_pair")]
    pub index: TrackIndex,
    #[serde(with = "crate::rational")]
    pub volume: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    /// No foldable turn is left and the map is a bijection.
    Terminated,
    IndexJump { site: String, missing_datum: String },
    StepCapReached { cap: usize },
    /// A scripted run applied all its moves.
    ScriptComplete,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldTrace {
    pub steps: Vec<TraceStep>,
    pub outcome: Outcome,
}

impl FoldTrace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap() + "\n"
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Selection {
    Done,
    Fold { turn: (Direction, Direction), mv: FoldMove },
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("index jump at {site}: {missing_datum}")]
pub struct IndexJump {
    pub site: String,
    pub missing_datum: String,
}

impl From<IndexJump> for Outcome {
    fn from(j: IndexJump) -> Self {
        Outcome::IndexJump { site: j.site, missing_datum: j.missing_datum }
    }
}

/// The gate at the class of `v` whose image germ is `germ`.
pub fn gate_with_germ(t: &TrainTrack, f: &Morphism, v: &str, germ: &Direction) -> Option<usize> {
    let (c, _) = t.class_of(v)?;
    t.gates_of_class(c).into_iter().find(|g| g.members.iter().any(|d| &f.image_germ(d) == germ)).map(|g| g.id)
}

fn common_prefix(p: &[Direction], q: &[Direction]) -> usize {
    p.iter().zip(q).take_while(|(a, b)| a == b).count()
}

/// Picks the least foldable illegal turn (by gate id, then direction order)
/// and classifies the fold it calls for.
pub fn select_move(t: &TrainTrack, f: &Morphism) -> Result<Selection, IndexJump> {
    let g = &t.graph;
    for gate in &t.gates {
        for (i, d1) in gate.members.iter().enumerate() {
            for d2 in &gate.members[i + 1..] {
                if g.tail(d1) != g.tail(d2) || f.image_germ(d1) != f.image_germ(d2) {
                    continue;
                }
                let turn = (d1.clone(), d2.clone());
                let (p1, p2) = (f.image(d1), f.image(d2));
                let k = common_prefix(&p1, &p2);
                if d1.edge == d2.edge {
                    // the two ends of a loop: only a fold short of the midpoint is possible
                    if 2 * k >= p1.len() {
                        continue;
                    }
                    let mv = FoldMove::Partial { e1: d1.clone(), e2: d2.clone(), fold_length: path_length(&f.target, &p1[..k]) };
                    return Ok(Selection::Fold { turn, mv });
                }
                let mv = if p1 == p2 {
                    FoldMove::Singular { e1: d1.clone(), e2: d2.clone() }
                } else if k < p1.len() && k < p2.len() {
                    FoldMove::Partial { e1: d1.clone(), e2: d2.clone(), fold_length: path_length(&f.target, &p1[..k]) }
                } else {
                    let (short, long, pl) = if p1.len() < p2.len() { (d1, d2, &p2) } else { (d2, d1, &p1) };
                    let special = gate_with_germ(t, f, g.head(short), &pl[k]).ok_or_else(|| IndexJump {
                        site: format!("full fold of {short} into {long}"),
                        missing_datum: format!("no gate at the far class of {short} continues along {}", pl[k]),
                    })?;
                    FoldMove::Full { e1: short.clone(), e2: long.clone(), special_gate: special }
                };
                return Ok(Selection::Fold { turn, mv });
            }
        }
    }
    Ok(Selection::Done)
}

#[derive(Clone, Debug, Default)]
pub struct Limits {
    /// Cap on fold steps; defaults to the edge count of the source
    /// subdivided at preimages of target vertices.
    pub max_steps: Option<usize>,
}

/// A trace together with the states after each step.
#[derive(Clone, Debug)]
pub struct Run {
    pub trace: FoldTrace,
    pub initial: (TrainTrack, Morphism),
    pub states: Vec<(TrainTrack, Morphism)>,
}

pub fn subdivision_bound(f: &Morphism) -> usize {
    f.edge_map.values().map(|p| p.len()).sum()
}

fn step(mv: FoldMove, t: &TrainTrack) -> TraceStep {
    TraceStep { mv, index: track_index(t), volume: t.graph.volume() }
}

/// Applies the specializations taking `t` to the track induced by `f`.
fn specialize_to_induced(t: &TrainTrack, f: &Morphism, run: &mut Run) -> Result<TrainTrack, IndexJump> {
    let jump = |why: String| IndexJump { site: "specialization".into(), missing_datum: why };
    let induced = f.induced_track().map_err(|e| jump(e.to_string()))?;
    let chain = specialization_chain(t, &induced)
        .map_err(|e| jump(e.to_string()))?
        .ok_or_else(|| jump("no specialization reaches the induced track".into()))?;
    let mut cur = t.clone();
    for s in chain {
        let mv = FoldMove::Specialize(s);
        cur = folds::apply(&cur, &mv).map_err(|e| jump(e.to_string()))?;
        run.trace.steps.push(step(mv, &cur));
        run.states.push((cur.clone(), f.clone()));
    }
    Ok(cur)
}

/// Runs the folding process from `t0` (on `f0`'s source) until no fold is
/// needed, an index jump is met, or the step cap is reached.
pub fn run_folding(t0: &TrainTrack, f0: &Morphism, limits: &Limits) -> Result<Run, MorphismError> {
    f0.validate()?;
    let cap = limits.max_steps.unwrap_or_else(|| subdivision_bound(f0));
    let mut run = Run {
        trace: FoldTrace { steps: vec![], outcome: Outcome::Terminated },
        initial: (t0.clone(), f0.clone()),
        states: vec![],
    };
    let (mut t, mut f) = (t0.clone(), f0.clone());
    let mut folds_done = 0;
    run.trace.outcome = loop {
        let sel = match select_move(&t, &f) {
            Ok(s) => s,
            Err(j) => break j.into(),
        };
        let mv = match sel {
            Selection::Done => {
                break if f.is_bijective() {
                    Outcome::Terminated
                } else {
                    Outcome::IndexJump {
                        site: "terminal".into(),
                        missing_datum: "no foldable illegal turn remains but the map is not a bijection".into(),
                    }
                };
            }
            Selection::Fold { mv, .. } => mv,
        };
        if folds_done >= cap {
            break Outcome::StepCapReached { cap };
        }
        match folds::apply_move(&t, &f, &mv) {
            Ok((t2, f2)) => {
                t = t2;
                f = f2;
            }
            Err(e) => break Outcome::IndexJump { site: describe(&mv), missing_datum: e.to_string() },
        }
        folds_done += 1;
        run.trace.steps.push(step(mv, &t));
        run.states.push((t.clone(), f.clone()));
        match specialize_to_induced(&t, &f, &mut run) {
            Ok(t2) => t = t2,
            Err(j) => break j.into(),
        }
    };
    Ok(run)
}

fn describe(mv: &FoldMove) -> String {
    match mv {
        FoldMove::Specialize(s) => format!("specialization of class {}", s.exceptional_class),
        FoldMove::Singular { e1, e2 } => format!("singular fold ({e1}, {e2})"),
        FoldMove::Partial { e1, e2, .. } => format!("partial fold ({e1}, {e2})"),
        FoldMove::Full { e1, e2, .. } => format!("full fold ({e1}, {e2})"),
    }
}

/// Starts a run from the track induced by `f` on its pullback metric.
pub fn run_from_induced(f: &Morphism, limits: &Limits) -> Result<Run, MorphismError> {
    let mut f = f.clone();
    f.source = f.pullback_metric();
    let t = f.induced_track()?;
    run_folding(&t, &f, limits)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenParams {
    pub rank: usize,
    pub max_edges: usize,
    pub moves: usize,
}

impl GenParams {
    pub fn new(rank: usize, moves: usize) -> Self {
        GenParams { rank, max_edges: 12, moves }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("parameters out of range: {0}")]
    BadParams(String),
    #[error("no instance found after {0} attempts")]
    Exhausted(usize),
}

/// THETA with `n + 1` unit edges from `u` to `v`.
pub fn theta(n: usize) -> MarkedGraph {
    let names: Vec<String> = (1..=n + 1).map(|k| format!("e{k}")).collect();
    let edges: Vec<(&str, &str, &str, &str)> = names.iter().map(|e| (e.as_str(), "u", "v", "1")).collect();
    let words: Vec<(String, String)> =
        (1..=n).map(|k| (format!("e{}", k + 1), Word::generator(k).inverse().to_string())).collect();
    let words: Vec<(&str, &str)> = words.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    fixtures::graph(n, &["u", "v"], &edges, &words)
}

fn tighten(p: Vec<Direction>) -> Vec<Direction> {
    let mut out: Vec<Direction> = Vec::with_capacity(p.len());
    for d in p {
        if out.last() == Some(&d.reversed()) {
            out.pop();
        } else {
            out.push(d);
        }
    }
    out
}

fn image_under(map: &BTreeMap<String, Vec<Direction>>, d: &Direction) -> Vec<Direction> {
    match d.end {
        End::From => map[&d.edge].clone(),
        End::To => reverse_path(&map[&d.edge]),
    }
}

/// One random fold of the target of `f`, composed into `f`.
fn random_target_fold(f: &Morphism, params: &GenParams, rng: &mut ChaCha8Rng) -> Option<Morphism> {
    let g = &f.target;
    let v = &g.vertices.choose(rng)?.id;
    let dirs = g.directions_at(v);
    if dirs.len() < 2 {
        return None;
    }
    let mut pair: Vec<&Direction> = dirs.choose_multiple(rng, 2).collect();
    if pair[0].edge == pair[1].edge {
        return None;
    }
    let (l0, l1) = (g.length(&pair[0].edge), g.length(&pair[1].edge));
    if l1 < l0 {
        pair.swap(0, 1);
    }
    let (short, long) = (g.length(&pair[0].edge), g.length(&pair[1].edge));
    let kind = match rng.gen_range(0..3) {
        1 if short < long => GraphFoldKind::Full,
        2 if short == long && g.head(pair[0]) != g.head(pair[1]) => GraphFoldKind::Singular,
        _ => GraphFoldKind::Partial(short / Rational::from_integer(2)),
    };
    let q = folds::fold_graph(g, kind, pair[0], pair[1]).ok()?;
    if q.graph.edges.len() > params.max_edges || q.graph.validate().is_err() {
        return None;
    }
    let mut out = f.clone();
    out.target = q.graph.clone();
    for (e, p) in &f.edge_map {
        let img = tighten(p.iter().flat_map(|d| image_under(&q.edge_map, d)).collect());
        out.edge_map.insert(e.clone(), img);
    }
    for w in out.vertex_map.values_mut() {
        *w = q.vertex_map[w.as_str()].clone();
    }
    out.source = out.pullback_metric();
    out.validate().ok()?;
    Some(out)
}

/// Erases a valence-2, stabilizer-free target vertex that no source vertex
/// hits, merging its two edges into one.
fn erase_valence_two(f: &Morphism) -> Option<Morphism> {
    let g = &f.target;
    let hit: std::collections::BTreeSet<&String> = f.vertex_map.values().collect();
    let x = g.vertices.iter().find(|v| v.stab_rank == 0 && g.valence(&v.id) == 2 && !hit.contains(&v.id))?;
    let dirs = g.directions_at(&x.id);
    let (d1, d2) = (&dirs[0], &dirs[1]);
    if d1.edge == d2.edge {
        return None;
    }
    let (a, b) = (g.head(d1).to_string(), g.head(d2).to_string());
    let word = g.direction_word(&d1.reversed()).times(&g.direction_word(d2));
    let mut raw = crate::graph::RawGraph::from_graph(g);
    let keep = d1.edge.clone();
    let merged = crate::graph::Edge { id: keep.clone(), from: a.clone(), to: b, length: g.length(&d1.edge) + g.length(&d2.edge) };
    let i = g.edge_index(&keep).unwrap();
    raw.edges[i] = merged;
    raw.words[i] = word;
    let j = g.edge_index(&d2.edge).unwrap();
    raw.edges.remove(j);
    raw.words.remove(j);
    raw.vertices.retain(|v| v.id != x.id);
    if raw.base == x.id {
        raw.base = a;
    }
    let (target, _) = raw.normalize();
    let through = [(d1.reversed(), d2.clone(), Direction::forward(keep.clone())), (d2.reversed(), d1.clone(), Direction::backward(keep))];
    let mut out = f.clone();
    out.target = target;
    for p in out.edge_map.values_mut() {
        let mut q = Vec::with_capacity(p.len());
        let mut k = 0;
        while k < p.len() {
            match through.iter().find(|(r, s, _)| k + 1 < p.len() && p[k] == *r && p[k + 1] == *s) {
                Some((_, _, n)) => {
                    q.push(n.clone());
                    k += 2;
                }
                None => {
                    q.push(p[k].clone());
                    k += 1;
                }
            }
        }
        *p = q;
    }
    out.validate().ok()?;
    Some(out)
}

fn check_params(params: &GenParams) -> Result<(), GenError> {
    if params.rank == 0 || params.rank > 5 || params.max_edges > 12 || params.moves > 10 {
        return Err(GenError::BadParams("need 1 ≤ rank ≤ 5, edges ≤ 12, moves ≤ 10".into()));
    }
    Ok(())
}

fn one_morphism(params: &GenParams, rng: &mut ChaCha8Rng) -> Morphism {
    let source = if params.rank >= 2 && rng.gen_bool(0.5) { theta(params.rank) } else { MarkedGraph::rose(params.rank) };
    let mut f = Morphism::identity(&source);
    let mut done = 0;
    let mut tries = 0;
    while done < params.moves && tries < 20 * params.moves {
        tries += 1;
        if let Some(next) = random_target_fold(&f, params, rng) {
            f = next;
            done += 1;
        }
    }
    while let Some(next) = erase_valence_two(&f) {
        f = next;
    }
    f.source = f.pullback_metric();
    f
}

/// A valid morphism from a rose or theta graph onto a random fold of it.
pub fn gen_morphism(seed: u64, params: &GenParams) -> Result<Morphism, GenError> {
    check_params(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(one_morphism(params, &mut rng))
}

pub const GEN_ATTEMPTS: usize = 2000;

/// Like [`gen_morphism`], keeping only instances whose induced track is
/// admissible and has the index of the target, so a folding run should not
/// need to jump. Returns the induced track and the morphism on its pullback
/// metric.
pub fn gen_instance(seed: u64, params: &GenParams) -> Result<(TrainTrack, Morphism), GenError> {
    check_params(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..GEN_ATTEMPTS {
        let f = one_morphism(params, &mut rng);
        let Ok(t) = f.induced_track() else { continue };
        if track_index(&t) != track_index(&TrainTrack::discrete(&f.target)) {
            continue;
        }
        if t.is_admissible(None).is_err() {
            continue;
        }
        return Ok((t, f));
    }
    Err(GenError::Exhausted(GEN_ATTEMPTS))
}

/// A random valid marked graph of ambient rank `rank`: a random spanning
/// tree on up to five vertices, extra edges for the free part, stabilizer
/// ranks on random vertices, and a basis scrambled by Nielsen moves.
pub fn gen_graph(seed: u64, rank: usize) -> Result<MarkedGraph, GenError> {
    if rank == 0 || rank > 5 {
        return Err(GenError::BadParams("need 1 ≤ rank ≤ 5".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..GEN_ATTEMPTS {
        if let Some(g) = one_graph(rank, &mut rng) {
            return Ok(g);
        }
    }
    Err(GenError::Exhausted(GEN_ATTEMPTS))
}

fn one_graph(rank: usize, rng: &mut ChaCha8Rng) -> Option<MarkedGraph> {
    let n = rng.gen_range(1..=5);
    let stab_total = rng.gen_range(0..=rank);
    let betti = rank - stab_total;
    let mut stab = vec![0usize; n];
    for _ in 0..stab_total {
        stab[rng.gen_range(0..n)] += 1;
    }
    let vid = |i: usize| format!("v{i}");
    let mut edges = Vec::new();
    let mut tree = Vec::new();
    for i in 1..n {
        let id = format!("t{i}");
        let (a, b) = (vid(rng.gen_range(0..i)), vid(i));
        let (from, to) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
        edges.push(Edge { id: id.clone(), from, to, length: Rational::new(rng.gen_range(1..=4), rng.gen_range(1..=3)) });
        tree.push(id);
    }
    for j in 0..betti {
        edges.push(Edge {
            id: format!("x{j}"),
            from: vid(rng.gen_range(0..n)),
            to: vid(rng.gen_range(0..n)),
            length: Rational::new(rng.gen_range(1..=4), rng.gen_range(1..=3)),
        });
    }
    // a random basis: Nielsen moves applied to the standard one
    let mut basis: Vec<Word> = (1..=rank).map(Word::generator).collect();
    if rank >= 2 {
        for _ in 0..rng.gen_range(0..2 * rank) {
            let i = rng.gen_range(0..rank);
            let j = (i + rng.gen_range(1..rank)) % rank;
            let other = if rng.gen_bool(0.5) { basis[j].clone() } else { basis[j].inverse() };
            basis[i] = if rng.gen_bool(0.5) { basis[i].times(&other) } else { other.times(&basis[i]) };
        }
    }
    let mut next = basis.into_iter();
    let vertices = (0..n)
        .map(|i| {
            let gens: Vec<Word> = next.by_ref().take(stab[i]).collect();
            Vertex { id: vid(i), stab_rank: stab[i], stab_gens: gens }
        })
        .collect();
    let edge_words = (0..betti).map(|j| (format!("x{j}"), next.next().unwrap())).collect();
    let g = MarkedGraph {
        ambient_rank: rank,
        vertices,
        edges,
        marking: Marking { base: vid(0), spanning_tree: tree, edge_words },
    };
    g.validate().ok()?;
    Some(g)
}

/// The scripted cycle: partial fold creating a trivalent vertex, its
/// specialization into the class of `w`, a full fold through it, and the
/// singular fold identifying it with `w`. Without the specialization the
/// singular fold has inequivalent endpoints.
pub fn appendix_scenario(with_specialization: bool) -> FoldTrace {
    let f0 = fixtures::appendix_morphism();
    let t0 = f0.induced_track().expect("fixture morphism is valid");
    let mut run = Run { trace: FoldTrace { steps: vec![], outcome: Outcome::ScriptComplete }, initial: (t0.clone(), f0.clone()), states: vec![] };
    let d = |s: &str| -> Direction { s.parse().unwrap() };
    let partial = FoldMove::Partial { e1: d("p+"), e2: d("q+"), fold_length: Rational::from_integer(1) };
    let (mut t, f) = folds::apply_move(&t0, &f0, &partial).expect("partial fold applies");
    run.trace.steps.push(step(partial, &t));
    let new_edge = t.graph.edges.iter().find(|e| f0.source.edge(&e.id).is_none()).unwrap().id.clone();
    if with_specialization {
        match specialize_to_induced(&t, &f, &mut run) {
            Ok(t2) => t = t2,
            Err(j) => {
                run.trace.outcome = j.into();
                return run.trace;
            }
        }
    }
    let short = Direction::forward(new_edge);
    let germ = f.image(&d("r+"))[1].clone();
    let special = match gate_with_germ(&t, &f, t.graph.head(&short), &germ) {
        Some(g) => g,
        None => {
            run.trace.outcome = Outcome::IndexJump { site: format!("full fold ({short}, r+)"), missing_datum: "no special gate".into() };
            return run.trace;
        }
    };
    let moves = [FoldMove::Full { e1: short, e2: d("r+"), special_gate: special }, FoldMove::Singular { e1: d("r-"), e2: d("s+") }];
    let mut f = f;
    for mv in moves {
        match folds::apply_move(&t, &f, &mv) {
            Ok((t2, f2)) => {
                t = t2;
                f = f2;
                run.trace.steps.push(step(mv, &t));
            }
            Err(e) => {
                run.trace.outcome = Outcome::IndexJump { site: describe(&mv), missing_datum: e.to_string() };
                return run.trace;
            }
        }
    }
    run.trace
}
