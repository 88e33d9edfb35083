use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use traintrack::engine::{self, GenError, GenParams, Limits, Outcome};
use traintrack::folds::{self, FoldError, FoldMove};
use traintrack::graph::{FreeFactorSystem, MarkedGraph};
use traintrack::index::{self, Skeleton};
use traintrack::morphism::{check_carrying, CarryError, Morphism};
use traintrack::track::{TrackError, TrainTrack, Witnesses};

#[derive(Parser)]
#[command(name = "traintrack", version, about = "Train tracks, indices and folding runs on marked graphs")]
struct Cli {
    /// Suppress diagnostics on standard error.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate a graph, track or morphism document.
    Validate { file: PathBuf },
    /// Index `{height, geom}` of a track.
    Index { file: PathBuf },
    /// Geometric and GL index of the tree of a graph.
    TreeIndex { file: PathBuf },
    /// Admissibility by legal-loop search, or by checking supplied witnesses.
    Admissible {
        file: PathBuf,
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Track induced by a morphism.
    Induce {
        #[arg(long)]
        morphism: PathBuf,
    },
    /// Whether a morphism carries a track, with the specialization chain.
    Carrying {
        #[arg(long)]
        track: PathBuf,
        #[arg(long)]
        morphism: PathBuf,
    },
    /// Apply one move to a track (and factor the morphism through it).
    Fold {
        #[arg(long)]
        track: PathBuf,
        #[arg(long = "move")]
        mv: PathBuf,
        #[arg(long)]
        morphism: Option<PathBuf>,
    },
    /// Run the folding process.
    Run {
        #[arg(long)]
        track: PathBuf,
        #[arg(long)]
        morphism: PathBuf,
        #[arg(long)]
        max_steps: Option<usize>,
        /// Also write the trace to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Height of a free factor system given by its ranks.
    Height {
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        ranks: Vec<usize>,
        #[arg(long)]
        ambient: usize,
        /// Use chain enumeration instead of the closed form.
        #[arg(long)]
        oracle: bool,
    },
    /// Count directions at marked vertices.
    Dircount {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        marked: Vec<String>,
        #[arg(long, value_enum)]
        check: Option<Check>,
    },
    /// Write a random admissible instance to `<out>_track.json` and `<out>_morphism.json`.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        moves: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Scripted scenarios.
    Scenario {
        #[arg(value_enum)]
        name: Scenario,
        /// Omit the specialization step.
        #[arg(long)]
        no_specialization: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    AllLeaves,
    OneUnmarked,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scenario {
    Appendix,
}

/// A failed invocation: exit code 1 for domain verdicts, 2 for bad input.
struct Failure {
    code: u8,
    body: Value,
    message: String,
}

impl Failure {
    fn input(kind: &str, message: impl ToString) -> Self {
        let message = message.to_string();
        Failure { code: 2, body: json!({"error": kind, "message": message}), message }
    }

    fn verdict(body: Value, message: impl ToString) -> Self {
        Failure { code: 1, body, message: message.to_string() }
    }
}

type CmdResult = Result<Value, Failure>;

fn read<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::input("io", format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::input("parse", format!("{}: {e}", path.display())))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn load_graph(path: &Path) -> Result<MarkedGraph, Failure> {
    let g: MarkedGraph = read(path)?;
    g.validate().map_err(|e| Failure::input(e.kind(), e))?;
    Ok(g)
}

fn load_track(path: &Path) -> Result<TrainTrack, Failure> {
    let t: TrainTrack = read(path)?;
    t.validate().map_err(|e| Failure::input(e.kind(), e))?;
    Ok(t)
}

fn load_morphism(path: &Path) -> Result<Morphism, Failure> {
    let f: Morphism = read(path)?;
    f.validate().map_err(|e| Failure::input(e.kind(), e))?;
    Ok(f)
}

fn validate(path: &Path) -> CmdResult {
    let doc: Value = read(path)?;
    let kind = if doc.get("edge_map").is_some() {
        load_morphism(path)?;
        "morphism"
    } else if doc.get("classes").is_some() {
        load_track(path)?;
        "track"
    } else {
        load_graph(path)?;
        "graph"
    };
    Ok(json!({"kind": kind, "valid": true}))
}

fn track_error(e: TrackError) -> Failure {
    match e {
        TrackError::NotAdmissible { ref vertex } => {
            Failure::verdict(json!({"admissible": false, "vertex": vertex}), &e)
        }
        TrackError::WitnessInvalid { ref vertex, ref reason } => {
            Failure::verdict(json!({"admissible": false, "vertex": vertex, "reason": reason}), &e)
        }
        TrackError::Invalid(ref v) => Failure::input(v.kind(), &e),
        TrackError::Unsupported(_) => Failure::input("unsupported", &e),
        _ => Failure::input("track", &e),
    }
}

fn carry_error(e: CarryError) -> Failure {
    match e {
        CarryError::NotCarried(ref why) => Failure::verdict(json!({"carried": false, "reason": why}), &e),
        CarryError::Morphism(ref m) => Failure::input(m.kind(), &e),
        _ => Failure::input("graph_mismatch", &e),
    }
}

fn fold_error(e: FoldError) -> Failure {
    Failure::verdict(json!({"applied": false, "error": e.kind(), "message": e.to_string()}), &e)
}

fn outcome_code(o: &Outcome) -> u8 {
    match o {
        Outcome::Terminated | Outcome::ScriptComplete => 0,
        Outcome::IndexJump { .. } | Outcome::StepCapReached { .. } => 1,
    }
}

fn write_json(path: &Path, v: &Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(v).expect("serializable") + "\n";
    std::fs::write(path, text).map_err(|e| Failure::input("io", format!("{}: {e}", path.display())))
}

fn trace_result(trace: &engine::FoldTrace) -> CmdResult {
    let v = to_value(trace);
    match outcome_code(&trace.outcome) {
        0 => Ok(v),
        _ => Err(Failure::verdict(v, format!("run ended with {:?}", trace.outcome))),
    }
}

fn execute(cmd: Cmd) -> CmdResult {
    match cmd {
        Cmd::Validate { file } => validate(&file),
        Cmd::Index { file } => Ok(to_value(&index::track_index(&load_track(&file)?))),
        Cmd::TreeIndex { file } => {
            let g = load_graph(&file)?;
            Ok(json!({"geom": index::geom_index_tree(&g), "gl": index::gl_index_tree(&g)}))
        }
        Cmd::Admissible { file, witness } => {
            let t = load_track(&file)?;
            let w: Option<Witnesses> = witness.as_deref().map(read).transpose()?;
            let tripods = t.is_admissible(w.as_ref()).map_err(track_error)?;
            Ok(json!({"admissible": true, "tripods": tripods}))
        }
        Cmd::Induce { morphism } => {
            let f = load_morphism(&morphism)?;
            Ok(to_value(&f.induced_track().map_err(|e| Failure::input(e.kind(), e))?))
        }
        Cmd::Carrying { track, morphism } => {
            let t = load_track(&track)?;
            let f = load_morphism(&morphism)?;
            let chain = check_carrying(&t, &f).map_err(carry_error)?;
            Ok(json!({"carried": true, "chain": chain}))
        }
        Cmd::Fold { track, mv, morphism } => {
            let t = load_track(&track)?;
            let m: FoldMove = read(&mv)?;
            match morphism {
                None => Ok(json!({"track": folds::apply(&t, &m).map_err(fold_error)?})),
                Some(p) => {
                    let f = load_morphism(&p)?;
                    let (t2, f2) = folds::apply_move(&t, &f, &m).map_err(fold_error)?;
                    Ok(json!({"track": t2, "morphism": f2}))
                }
            }
        }
        Cmd::Run { track, morphism, max_steps, trace } => {
            let t = load_track(&track)?;
            let f = load_morphism(&morphism)?;
            if t.graph != f.source {
                return Err(Failure::input("graph_mismatch", "the track must live on the morphism's source graph"));
            }
            let run = engine::run_folding(&t, &f, &Limits { max_steps }).map_err(|e| Failure::input(e.kind(), e))?;
            if let Some(out) = trace {
                std::fs::write(&out, run.trace.to_json())
                    .map_err(|e| Failure::input("io", format!("{}: {e}", out.display())))?;
            }
            trace_result(&run.trace)
        }
        Cmd::Height { ranks, ambient, oracle } => {
            let a = FreeFactorSystem::new(ranks, ambient);
            if !a.is_well_formed() {
                return Err(Failure::input("malformed", "ranks must be positive with total at most the ambient rank"));
            }
            Ok(json!(if oracle { index::height_oracle(&a) } else { index::height(&a) }))
        }
        Cmd::Dircount { graph, marked, check } => {
            let g = load_graph(&graph)?;
            let (sk, idx) = Skeleton::of(&g);
            let mut set = BTreeSet::new();
            for v in &marked {
                let i = idx.get(v).ok_or_else(|| Failure::input("unknown_vertex", format!("unknown vertex {v}")))?;
                set.insert(*i);
            }
            let count = index::marked_direction_count(&sk, &set).map_err(|e| Failure::input("dircount", e))?;
            let value = to_value(&count);
            let Some(check) = check else { return Ok(value) };
            let (holds, name) = match check {
                Check::AllLeaves => (count.bound_all_leaves, "all-leaves"),
                Check::OneUnmarked => (count.bound_one_unmarked_leaf, "one-unmarked"),
            };
            match holds {
                Some(true) => Ok(value),
                Some(false) => Err(Failure::verdict(value, format!("bound {name} fails"))),
                None => Err(Failure::input("not_applicable", format!("bound {name} does not apply to this marking"))),
            }
        }
        Cmd::Gen { seed, rank, moves, out } => {
            let (t, f) = engine::gen_instance(seed, &GenParams::new(rank, moves)).map_err(|e| match e {
                GenError::BadParams(_) => Failure::input("bad_params", e),
                GenError::Exhausted(_) => Failure::verdict(json!({"generated": false}), e),
            })?;
            let stem = out.to_string_lossy();
            let (tp, mp) = (PathBuf::from(format!("{stem}_track.json")), PathBuf::from(format!("{stem}_morphism.json")));
            write_json(&tp, &to_value(&t))?;
            write_json(&mp, &to_value(&f))?;
            Ok(json!({"track": tp, "morphism": mp}))
        }
        Cmd::Scenario { name: Scenario::Appendix, no_specialization } => {
            trace_result(&engine::appendix_scenario(!no_specialization))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if e.exit_code() == 0 {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            if !std::env::args().any(|a| a == "--quiet") {
                let _ = e.print();
            }
            println!("{}", json!({"error": "usage", "message": e.kind().to_string()}));
            return ExitCode::from(2);
        }
    };
    let quiet = cli.quiet;
    let (code, body) = match execute(cli.cmd) {
        Ok(v) => (0, v),
        Err(f) => {
            if !quiet {
                eprintln!("traintrack: {}", f.message);
            }
            (f.code, f.body)
        }
    };
    println!("{}", serde_json::to_string_pretty(&body).expect("serializable"));
    ExitCode::from(code)
}
