use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use traintrack_ffi::*;

fn fixture(name: &str) -> CString {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/cli").join(name);
    CString::new(std::fs::read_to_string(p).unwrap()).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(tt_last_error()).to_string_lossy().into_owned() }
}

#[test]
fn graph_and_track_queries() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(tt_graph_from_json(fixture("rose2.graph.json").as_ptr(), &mut g), TtStatus::Ok);
        let (mut geom, mut gl) = (0, 0);
        assert_eq!(tt_graph_tree_index(g, &mut geom, &mut gl), TtStatus::Ok);
        assert_eq!((geom, gl), (1, 2));
        let mut t = ptr::null_mut();
        assert_eq!(tt_track_discrete(g, &mut t), TtStatus::Ok);
        let (mut h, mut tg) = (9, 9);
        assert_eq!(tt_track_index(t, &mut h, &mut tg), TtStatus::Ok);
        assert_eq!((h, tg), (0, 1));
        assert_eq!(tt_track_is_admissible(t), TtStatus::Ok);

        let mut s = ptr::null_mut();
        assert_eq!(tt_track_to_json(t, &mut s), TtStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(tt_track_from_json(s, &mut back), TtStatus::Ok);
        assert!(CStr::from_ptr(s).to_str().unwrap().contains("\"gates\""));
        tt_string_free(s);
        tt_track_free(back);

        let mv = CString::new(r#"{"kind":"partial","e1":"a+","e2":"b+","fold_length":"1/2"}"#).unwrap();
        let mut t2 = ptr::null_mut();
        assert_eq!(tt_track_apply(t, mv.as_ptr(), &mut t2), TtStatus::IllegalMove);
        assert!(t2.is_null());
        assert!(last_error().contains("not_same_gate"));
        tt_track_free(t);
        tt_graph_free(g);
    }
}

#[test]
fn not_admissible_and_bad_input() {
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(tt_track_from_json(fixture("rose2_folded.track.json").as_ptr(), &mut t), TtStatus::Ok);
        assert_eq!(tt_track_is_admissible(t), TtStatus::NotAdmissible);
        tt_track_free(t);

        let mut g = ptr::null_mut();
        assert_eq!(tt_graph_from_json(fixture("zero_length.graph.json").as_ptr(), &mut g), TtStatus::Invalid);
        assert_eq!(tt_graph_from_json(fixture("truncated.graph.json").as_ptr(), &mut g), TtStatus::Parse);
        assert!(last_error().contains("EOF"));
        assert!(g.is_null());
        let bad = [0xffu8, 0];
        assert_eq!(tt_graph_from_json(bad.as_ptr().cast(), &mut g), TtStatus::InvalidUtf8);
        assert_eq!(tt_graph_from_json(fixture("rose2.graph.json").as_ptr(), ptr::null_mut()), TtStatus::NullPointer);
    }
}

#[test]
fn morphisms_and_runs() {
    unsafe {
        let mut f = ptr::null_mut();
        assert_eq!(tt_morphism_from_json(fixture("singular.morphism.json").as_ptr(), &mut f), TtStatus::Ok);
        let mut t = ptr::null_mut();
        assert_eq!(tt_morphism_induced_track(f, &mut t), TtStatus::Ok);
        assert_eq!(tt_carries(t, f), TtStatus::Ok);
        let mut trace = ptr::null_mut();
        assert_eq!(tt_run(t, f, 0, &mut trace), TtStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(CStr::from_ptr(trace).to_str().unwrap()).unwrap();
        assert_eq!(v["outcome"]["kind"], "terminated");
        tt_string_free(trace);
        let mut trace = ptr::null_mut();
        assert_eq!(tt_run(t, f, 1, &mut trace), TtStatus::StepCap);
        tt_string_free(trace);
        tt_track_free(t);
        tt_morphism_free(f);

        let mut f = ptr::null_mut();
        assert_eq!(tt_morphism_from_json(fixture("theta_to_rose.morphism.json").as_ptr(), &mut f), TtStatus::Ok);
        let mut t = ptr::null_mut();
        assert_eq!(tt_track_from_json(fixture("theta2_discrete.track.json").as_ptr(), &mut t), TtStatus::Ok);
        assert_eq!(tt_carries(t, f), TtStatus::NotCarried);
        tt_track_free(t);
        assert_eq!(tt_morphism_induced_track(f, &mut t), TtStatus::Ok);
        let mut trace = ptr::null_mut();
        assert_eq!(tt_run(t, f, 0, &mut trace), TtStatus::IndexJump);
        assert!(!trace.is_null());
        tt_string_free(trace);
        tt_track_free(t);
        tt_morphism_free(f);
    }
}

#[test]
fn heights() {
    let mut h = 0;
    unsafe {
        assert_eq!(tt_height([2usize].as_ptr(), 1, 2, &mut h), TtStatus::Ok);
        assert_eq!(h, 3);
        assert_eq!(tt_height(ptr::null(), 0, 3, &mut h), TtStatus::Ok);
        assert_eq!(h, 0);
        assert_eq!(tt_height([3usize].as_ptr(), 1, 2, &mut h), TtStatus::Invalid);
    }
}

fn lib_dir() -> PathBuf {
    std::env::current_exe().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = lib_dir().join("libtraintrack_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let out = tempfile::tempdir().unwrap();
    let exe = out.path().join("smoke");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-Wno-unused-result", "-I"])
        .arg(dir.join("include"))
        .arg(dir.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("a C compiler is needed for this test");
    assert!(status.success());
    let run = Command::new(&exe).arg(dir.join("../core/fixtures/cli/rose2.graph.json")).output().unwrap();
    assert!(run.status.success());
    assert_eq!(String::from_utf8_lossy(&run.stdout), "tree 1 2 track 0 1 admissible 0 height 3 bad 3 msg\n");
}
