//! Acceptance checks, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always printed; exits non-zero on any FAIL.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use traintrack::engine::{self, GenParams, Limits, Outcome, Run};
use traintrack::graph::{Direction, FreeFactorSystem, MarkedGraph};
use traintrack::index::{self, geom_index_track, gl_index_tree, geom_index_tree, track_index, Skeleton};
use traintrack::track::{elliptic_product_witnesses, TrainTrack, Turn};

const GRAPHS_PER_RANK: u64 = 500;
const BOUND_BUDGET: Duration = Duration::from_secs(10);
const MORPHISMS: u64 = 520;
const RUNS: usize = 200;
const DIRCOUNT_MAX_EDGES: usize = 6;
const DIRCOUNT_BUDGET: Duration = Duration::from_secs(60);
const SEGMENTS: usize = 100;

type Verdict = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Verdict + 'a>);

fn check(cond: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

fn index_bounds() -> Verdict {
    let start = Instant::now();
    let mut count = 0;
    for n in 2..=5usize {
        for seed in 0..GRAPHS_PER_RANK {
            let g = engine::gen_graph(seed * 10 + n as u64, n).map_err(|e| format!("N={n} seed {seed}: {e}"))?;
            check(g.validate().is_ok() && g.ambient_rank == n, || format!("N={n} seed {seed}: invalid graph"))?;
            let (geom, gl) = (geom_index_tree(&g), gl_index_tree(&g));
            let n3 = 3 * n as i64 - 3;
            let n2 = 2 * n as i64 - 2;
            check(geom <= n3 && gl <= n2 && 2 * geom <= 3 * gl, || {
                format!("N={n} seed {seed}: geom {geom}, gl {gl}")
            })?;
            count += 1;
        }
        let rose = MarkedGraph::rose(n);
        check(gl_index_tree(&rose) == 2 * n as i64 - 2, || format!("ROSE_{n} misses gl = 2N-2"))?;
    }
    let t = start.elapsed();
    check(t < BOUND_BUDGET, || format!("took {t:?}"))?;
    Ok(format!("{count} graphs, N in 2..=5, {:.2}s", t.as_secs_f64()))
}

fn carrier_bound() -> Verdict {
    let mut count = 0;
    for seed in 0..MORPHISMS {
        let rank = 2 + (seed % 4) as usize;
        let moves = (seed / 4 % 7) as usize;
        let f = engine::gen_morphism(seed, &GenParams::new(rank, moves)).map_err(|e| e.to_string())?;
        let t = f.induced_track().map_err(|e| format!("seed {seed}: {e}"))?;
        let (a, b) = (geom_index_track(&t), geom_index_tree(&f.target));
        check(a <= b, || format!("seed {seed}: track {a} > tree {b}"))?;
        count += 1;
    }
    Ok(format!("{count} induced tracks, zero violations"))
}

/// The folding corpus shared by the move, admissibility and termination checks.
struct Corpus {
    runs: Vec<(Run, usize)>,
    skipped: usize,
}

fn corpus() -> Corpus {
    let mut runs = Vec::new();
    let mut skipped = 0;
    let mut seed = 0u64;
    while runs.len() < RUNS {
        let rank = 2 + (seed % 3) as usize;
        let moves = 1 + (seed / 3 % 6) as usize;
        match engine::gen_instance(seed, &GenParams::new(rank, moves)) {
            Ok((t, f)) => {
                let bound = engine::subdivision_bound(&f);
                runs.push((engine::run_folding(&t, &f, &Limits::default()).expect("generated morphism is valid"), bound));
            }
            Err(_) => skipped += 1,
        }
        seed += 1;
    }
    Corpus { runs, skipped }
}

fn move_invariance(c: &Corpus) -> Verdict {
    let mut moves = 0;
    for (k, (run, _)) in c.runs.iter().enumerate() {
        let t0 = &run.initial.0;
        check(t0.graph.edges.len() <= 12 && t0.graph.ambient_rank <= 4, || format!("run {k}: instance too large"))?;
        let i0 = track_index(t0);
        let mut vol = t0.graph.volume();
        for (j, step) in run.trace.steps.iter().enumerate() {
            let (t, _) = &run.states[j];
            check(track_index(t) == i0 && step.index == i0, || format!("run {k} step {j}: index {:?} != {i0:?}", step.index))?;
            check(step.volume == t.graph.volume(), || format!("run {k} step {j}: recorded volume differs"))?;
            if step.mv.is_fold() {
                check(step.volume < vol, || format!("run {k} step {j}: volume did not drop"))?;
            } else {
                check(step.volume == vol, || format!("run {k} step {j}: specialization changed volume"))?;
            }
            vol = step.volume;
            moves += 1;
        }
    }
    Ok(format!("{} runs ({} seeds without an instance), {moves} moves", c.runs.len(), c.skipped))
}

fn admissibility(c: &Corpus) -> Verdict {
    let mut checked = 0;
    for (k, (run, _)) in c.runs.iter().enumerate() {
        if run.trace.outcome != Outcome::Terminated {
            continue;
        }
        for (j, (t, _)) in std::iter::once(&run.initial).chain(&run.states).enumerate() {
            check(t.is_free_regime(), || format!("run {k}: not free-stabilizer"))?;
            t.is_admissible(None).map_err(|e| format!("run {k} state {j}: {e}"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} states admissible"))
}

fn termination(c: &Corpus) -> Verdict {
    let mut longest = 0;
    for (k, (run, bound)) in c.runs.iter().enumerate() {
        check(run.trace.outcome == Outcome::Terminated, || format!("run {k}: {:?}", run.trace.outcome))?;
        let folds = run.trace.steps.iter().filter(|s| s.mv.is_fold()).count();
        check(folds <= *bound, || format!("run {k}: {folds} folds > bound {bound}"))?;
        let last = run.states.last().map_or(&run.initial.1, |s| &s.1);
        check(last.is_bijective(), || format!("run {k}: terminal map not bijective"))?;
        longest = longest.max(folds);
    }
    Ok(format!("{} runs terminated, longest {longest} folds", c.runs.len()))
}

fn direction_counts() -> Verdict {
    let start = Instant::now();
    let skeletons = Skeleton::enumerate_connected(DIRCOUNT_MAX_EDGES);
    let (mut cases, mut facts) = (0usize, 0usize);
    for (k, g) in skeletons.iter().enumerate() {
        let n = g.vertex_count;
        for mask in 1u32..(1 << n) {
            let marked: BTreeSet<usize> = (0..n).filter(|v| mask >> v & 1 == 1).collect();
            let d = index::marked_direction_count(g, &marked).map_err(|e| e.to_string())?;
            // independent recount
            let dirs: usize = g.edges.iter().map(|&(a, b)| marked.contains(&a) as usize + marked.contains(&b) as usize).sum();
            check(dirs == d.directions, || format!("graph {k}: count mismatch"))?;
            let (l, r) = (marked.len() as i64, (g.edges.len() + 1 - n) as i64);
            let unmarked_leaves = (0..n).filter(|v| g.degree(*v) == 1 && !marked.contains(v)).count();
            let dirs = dirs as i64;
            if unmarked_leaves == 0 {
                check(dirs <= 2 * (l + r - 1), || format!("graph {k} mask {mask}: all-leaves bound"))?;
                facts += 1;
            }
            if unmarked_leaves == 1 {
                check(dirs <= 2 * (l + r - 1) + 1, || format!("graph {k} mask {mask}: one-unmarked bound"))?;
                facts += 1;
            }
            if marked.len() == n {
                check(dirs == 2 * (n as i64 + r - 1), || format!("graph {k}: Euler identity"))?;
                facts += 1;
            }
            cases += 1;
        }
    }
    let t = start.elapsed();
    check(t < DIRCOUNT_BUDGET, || format!("took {t:?}"))?;
    Ok(format!("{} graphs, {cases} markings, {facts} fact instances, {:.2}s", skeletons.len(), t.as_secs_f64()))
}

fn height_oracle() -> Verdict {
    let mut count = 0;
    for n in 1..=5 {
        for a in index::all_systems(n) {
            let (h, o) = (index::height(&a), index::height_oracle(&a));
            check(h == o, || format!("{:?} in F_{n}: closed form {h}, oracle {o}", a.ranks))?;
            count += 1;
        }
    }
    let h = |r: Vec<usize>, n| index::height_oracle(&FreeFactorSystem::new(r, n));
    check(h(vec![], 1) == 0 && h(vec![1], 1) == 1 && h(vec![2], 2) == 3, || "anchor values".into())?;
    Ok(format!("{count} systems with N ≤ 5 agree"))
}

fn rose_carriers() -> Verdict {
    let mut count = 0;
    let mut rejected = Vec::new();
    for n in 1..=4 {
        for a in index::all_systems(n).into_iter().filter(|a| !a.is_empty()) {
            if a.ranks == [n] {
                // a single vertex without edges fails minimality
                check(MarkedGraph::make_rose(&a).is_err(), || format!("{:?} in F_{n} accepted", a.ranks))?;
                rejected.push(n);
                continue;
            }
            let g = MarkedGraph::make_rose(&a).map_err(|e| format!("{:?} in F_{n}: {e}", a.ranks))?;
            g.validate().map_err(|e| format!("{:?} in F_{n}: {e}", a.ranks))?;
            check(g.elliptic_system() == a, || format!("{:?} in F_{n}: wrong elliptic system", a.ranks))?;
            let t = TrainTrack::discrete(&g);
            let w = elliptic_product_witnesses(&g).ok_or_else(|| format!("{:?} in F_{n}: no witnesses", a.ranks))?;
            let tripods = t.is_admissible(Some(&w)).map_err(|e| format!("{:?} in F_{n}: {e}", a.ranks))?;
            check(tripods.len() == g.vertices.len(), || format!("{:?} in F_{n}: missing tripods", a.ranks))?;
            count += 1;
        }
    }
    Ok(format!("{count} systems certified; single-factor {{N}} rejected for N in {rejected:?}"))
}

fn random_legal_segment(t: &TrainTrack, rng: &mut ChaCha8Rng) -> Vec<Direction> {
    let g = &t.graph;
    let mut path = vec![g.all_directions().choose(rng).unwrap().clone()];
    let len = rng.gen_range(1..=6);
    while path.len() < len {
        let last = path.last().unwrap().reversed();
        let next: Vec<Direction> = g
            .directions_at(g.tail(&last))
            .into_iter()
            .filter(|d| *d != last && t.is_legal_turn(&Turn::Pair(last.clone(), d.clone())).unwrap())
            .collect();
        match next.choose(rng) {
            Some(d) => path.push(d.clone()),
            None => break,
        }
    }
    path
}

fn contains_cyclically(hay: &[Direction], needle: &[Direction]) -> bool {
    let doubled: Vec<&Direction> = hay.iter().chain(hay).collect();
    needle.len() <= hay.len() && doubled.windows(needle.len()).any(|w| w.iter().zip(needle).all(|(a, b)| *a == b))
}

fn recurrence() -> Verdict {
    let mut tracks = vec![TrainTrack::discrete(&MarkedGraph::rose(2)), TrainTrack::discrete(&MarkedGraph::theta2())];
    for seed in 0..20 {
        if let Ok((t, _)) = engine::gen_instance(1000 + seed, &GenParams::new(3, 3)) {
            tracks.push(t);
        }
    }
    tracks.retain(|t| t.is_free_regime() && t.is_admissible(None).is_ok());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for k in 0..SEGMENTS {
        let t = &tracks[k % tracks.len()];
        let seg = random_legal_segment(t, &mut rng);
        check(t.is_legal_path(&seg) == Ok(true), || format!("segment {k} is not legal"))?;
        let start = t.graph.tail(&seg[0]).to_string();
        let lp = t.extend_to_legal_loop(&start, &seg).map_err(|e| format!("segment {k}: {e}"))?;
        check(lp.starts_with(&seg) && contains_cyclically(&lp, &seg), || format!("segment {k} not contained"))?;
        check(t.is_cyclically_legal(&lp) == Ok(true), || format!("segment {k}: loop not cyclically legal"))?;
    }
    Ok(format!("{SEGMENTS} segments over {} certified tracks", tracks.len()))
}

fn appendix_scenario() -> Verdict {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let with = engine::appendix_scenario(true);
    let without = engine::appendix_scenario(false);
    let i0 = with.steps[0].index;
    check(with.steps.iter().all(|s| s.index == i0), || "index changed".into())?;
    check(with.outcome == Outcome::ScriptComplete, || format!("{:?}", with.outcome))?;
    check(
        matches!(&without.outcome, Outcome::IndexJump { site, .. } if site.starts_with("singular fold")),
        || format!("variant ended with {:?}", without.outcome),
    )?;
    let golden = |name: &str| std::fs::read_to_string(dir.join(name)).unwrap_or_default();
    check(with.to_json() == golden("appendix.trace.json"), || "trace differs from golden file".into())?;
    check(without.to_json() == golden("appendix_no_specialization.trace.json"), || "variant differs from golden file".into())?;
    Ok(format!("{} steps at index {:?}; variant jumps at the singular fold", with.steps.len(), i0.pair()))
}

fn cli_corpus() -> Verdict {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let manifest: Vec<Value> = serde_json::from_str(&std::fs::read_to_string(root.join("fixtures/cli/manifest.json")).unwrap()).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let tmp_s = tmp.path().to_string_lossy().into_owned();
    for case in &manifest {
        let args: Vec<String> = case["args"].as_array().unwrap().iter().map(|a| a.as_str().unwrap().replace("{tmp}", &tmp_s)).collect();
        let want = case["exit"].as_i64().unwrap();
        for quiet in [true, false] {
            let mut cmd = Command::new(env!("CARGO_BIN_EXE_traintrack"));
            cmd.current_dir(root);
            if quiet {
                cmd.arg("--quiet");
            }
            let out = cmd.args(&args).output().unwrap();
            let code = out.status.code().unwrap_or(-1) as i64;
            check(code == want, || format!("{args:?}: exit {code}, expected {want}"))?;
            let v: Value = serde_json::from_slice(&out.stdout).map_err(|e| format!("{args:?}: stdout is not JSON: {e}"))?;
            let again: Value = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
            check(again == v, || format!("{args:?}: JSON does not round-trip"))?;
            check(!quiet || out.stderr.is_empty(), || format!("{args:?}: diagnostics under --quiet"))?;
            if let Some(i) = args.iter().position(|a| a == "--trace") {
                let file: Value = serde_json::from_str(&std::fs::read_to_string(&args[i + 1]).unwrap()).unwrap();
                check(file == v, || "trace file differs from standard output".into())?;
            }
            if args[0] == "induce" && want == 0 {
                // emitted tracks load back as valid tracks
                let p = tmp.path().join("induced.json");
                std::fs::write(&p, out.stdout).unwrap();
                let st = Command::new(env!("CARGO_BIN_EXE_traintrack")).arg("validate").arg(&p).output().unwrap();
                check(st.status.success(), || format!("{args:?}: emitted track does not validate"))?;
            }
        }
    }
    Ok(format!("{} invocations, exit codes and round-trips conform", manifest.len()))
}

fn main() {
    let corpus = corpus();
    let criteria: Vec<Criterion> = vec![
        ("index bounds on generated trees", Box::new(index_bounds)),
        ("carrier bound for induced tracks", Box::new(carrier_bound)),
        ("move invariance", Box::new(|| move_invariance(&corpus))),
        ("admissibility preservation", Box::new(|| admissibility(&corpus))),
        ("termination", Box::new(|| termination(&corpus))),
        ("direction-count facts", Box::new(direction_counts)),
        ("height oracle", Box::new(height_oracle)),
        ("rose carriers", Box::new(rose_carriers)),
        ("recurrence of legal segments", Box::new(recurrence)),
        ("scripted specialization cycle", Box::new(appendix_scenario)),
        ("CLI corpus", Box::new(cli_corpus)),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
