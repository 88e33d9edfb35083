//! C interface to `traintrack`. Objects cross the boundary as opaque handles
//! built from JSON documents; every call returns a [`TtStatus`] and leaves a
//! message for [`tt_last_error`] on failure.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use traintrack::engine::{self, Limits, Outcome};
use traintrack::folds::{self, FoldMove};
use traintrack::graph::{FreeFactorSystem, MarkedGraph};
use traintrack::index;
use traintrack::morphism::{check_carrying, CarryError, Morphism};
use traintrack::track::{TrackError, TrainTrack};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Invalid = 4,
    NotAdmissible = 5,
    NotCarried = 6,
    IllegalMove = 7,
    IndexJump = 8,
    StepCap = 9,
    Unsupported = 10,
    Panic = 11,
}

pub struct TtGraph(MarkedGraph);
pub struct TtTrack(TrainTrack);
pub struct TtMorphism(Morphism);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl ToString) {
    let s = CString::new(msg.to_string().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = s);
}

type Res<T> = Result<T, TtStatus>;

fn fail<T>(status: TtStatus, msg: impl ToString) -> Res<T> {
    set_error(msg);
    Err(status)
}

fn guard(f: impl FnOnce() -> Res<()>) -> TtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TtStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            TtStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char) -> Res<&'a str> {
    if p.is_null() {
        return fail(TtStatus::NullPointer, "null string");
    }
    CStr::from_ptr(p).to_str().or_else(|e| fail(TtStatus::InvalidUtf8, e))
}

unsafe fn parse<T: serde::de::DeserializeOwned>(p: *const c_char) -> Res<T> {
    serde_json::from_str(text(p)?).or_else(|e| fail(TtStatus::Parse, e))
}

unsafe fn borrow<'a, T>(p: *const T) -> Res<&'a T> {
    p.as_ref().map_or_else(|| fail(TtStatus::NullPointer, "null handle"), Ok)
}

unsafe fn put<T>(out: *mut T, v: T) -> Res<()> {
    if out.is_null() {
        return fail(TtStatus::NullPointer, "null output pointer");
    }
    out.write(v);
    Ok(())
}

unsafe fn put_json<T: serde::Serialize>(out: *mut *mut c_char, v: &T) -> Res<()> {
    let s = serde_json::to_string(v).expect("serializable");
    put(out, CString::new(s).expect("JSON has no NUL").into_raw())
}

fn track_status(e: TrackError) -> TtStatus {
    let status = match e {
        TrackError::NotAdmissible { .. } | TrackError::WitnessInvalid { .. } => TtStatus::NotAdmissible,
        TrackError::Unsupported(_) => TtStatus::Unsupported,
        _ => TtStatus::Invalid,
    };
    set_error(e);
    status
}

/// Message for the last failed call on this thread. Valid until the next
/// failing call; never null.
#[no_mangle]
pub extern "C" fn tt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` is null or came from this library and was not freed before.
#[no_mangle]
pub unsafe extern "C" fn tt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and validates a marked graph.
///
/// # Safety
/// `json` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn tt_graph_from_json(json: *const c_char, out: *mut *mut TtGraph) -> TtStatus {
    guard(|| {
        let g: MarkedGraph = parse(json)?;
        g.validate().or_else(|e| fail(TtStatus::Invalid, e))?;
        put(out, Box::into_raw(Box::new(TtGraph(g))))
    })
}

/// # Safety
/// `g` is null or a live handle from [`tt_graph_from_json`].
#[no_mangle]
pub unsafe extern "C" fn tt_graph_free(g: *mut TtGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Geometric and GL index of the tree of `g`.
///
/// # Safety
/// `g` is a live handle; `geom` and `gl` are writable.
#[no_mangle]
pub unsafe extern "C" fn tt_graph_tree_index(g: *const TtGraph, geom: *mut i64, gl: *mut i64) -> TtStatus {
    guard(|| {
        let g = &borrow(g)?.0;
        put(geom, index::geom_index_tree(g))?;
        put(gl, index::gl_index_tree(g))
    })
}

/// The discrete track (singleton classes and gates) on `g`.
///
/// # Safety
/// `g` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn tt_track_discrete(g: *const TtGraph, out: *mut *mut TtTrack) -> TtStatus {
    guard(|| {
        let t = TrainTrack::discrete(&borrow(g)?.0);
        put(out, Box::into_raw(Box::new(TtTrack(t))))
    })
}

/// Parses and validates a track.
///
/// # Safety
/// `json` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn tt_track_from_json(json: *const c_char, out: *mut *mut TtTrack) -> TtStatus {
    guard(|| {
        let t: TrainTrack = parse(json)?;
        t.validate().or_else(|e| fail(TtStatus::Invalid, e))?;
        put(out, Box::into_raw(Box::new(TtTrack(t))))
    })
}

/// # Safety
/// `t` is null or a live track handle.
#[no_mangle]
pub unsafe extern "C" fn tt_track_free(t: *mut TtTrack) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Serializes a track; free the result with [`tt_string_free`].
///
/// # Safety
/// `t` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn tt_track_to_json(t: *const TtTrack, out: *mut *mut c_char) -> TtStatus {
    guard(|| put_json(out, &borrow(t)?.0))
}

/// # Safety
/// `t` is a live handle; `height` and `geom` are writable.
#[no_mangle]
pub unsafe extern "C" fn tt_track_index(t: *const TtTrack, height: *mut usize, geom: *mut i64) -> TtStatus {
    guard(|| {
        let i = index::track_index(&borrow(t)?.0);
        put(height, i.height)?;
        put(geom, i.geom)
    })
}

/// `Ok` if every vertex has a tripod of legal loops, `NotAdmissible` otherwise.
///
/// # Safety
/// `t` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn tt_track_is_admissible(t: *const TtTrack) -> TtStatus {
    guard(|| borrow(t)?.0.is_admissible(None).map(|_| ()).map_err(track_status))
}

/// Applies a move given as JSON, returning the new track.
///
/// # Safety
/// `t` is a live handle; `move_json` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn tt_track_apply(t: *const TtTrack, move_json: *const c_char, out: *mut *mut TtTrack) -> TtStatus {
    guard(|| {
        let t = &borrow(t)?.0;
        let m: FoldMove = parse(move_json)?;
        let t2 = folds::apply(t, &m).or_else(|e| fail(TtStatus::IllegalMove, e))?;
        put(out, Box::into_raw(Box::new(TtTrack(t2))))
    })
}

/// Parses and validates a morphism.
///
/// # Safety
/// `json` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn tt_morphism_from_json(json: *const c_char, out: *mut *mut TtMorphism) -> TtStatus {
    guard(|| {
        let f: Morphism = parse(json)?;
        f.validate().or_else(|e| fail(TtStatus::Invalid, e))?;
        put(out, Box::into_raw(Box::new(TtMorphism(f))))
    })
}

/// # Safety
/// `f` is null or a live morphism handle.
#[no_mangle]
pub unsafe extern "C" fn tt_morphism_free(f: *mut TtMorphism) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// # Safety
/// `f` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn tt_morphism_induced_track(f: *const TtMorphism, out: *mut *mut TtTrack) -> TtStatus {
    guard(|| {
        let t = borrow(f)?.0.induced_track().or_else(|e| fail(TtStatus::Invalid, e))?;
        put(out, Box::into_raw(Box::new(TtTrack(t))))
    })
}

/// `Ok` if `f` carries `t`, `NotCarried` otherwise.
///
/// # Safety
/// `t` and `f` are live handles.
#[no_mangle]
pub unsafe extern "C" fn tt_carries(t: *const TtTrack, f: *const TtMorphism) -> TtStatus {
    guard(|| match check_carrying(&borrow(t)?.0, &borrow(f)?.0) {
        Ok(_) => Ok(()),
        Err(e @ CarryError::NotCarried(_)) => fail(TtStatus::NotCarried, e),
        Err(e) => fail(TtStatus::Invalid, e),
    })
}

/// Runs the folding process from `t` along `f`. `max_steps == 0` uses the
/// default bound. The trace JSON is written to `trace` whatever the outcome;
/// the status reports it (`Ok`, `IndexJump` or `StepCap`).
///
/// # Safety
/// `t` and `f` are live handles; `trace` is writable.
#[no_mangle]
pub unsafe extern "C" fn tt_run(t: *const TtTrack, f: *const TtMorphism, max_steps: usize, trace: *mut *mut c_char) -> TtStatus {
    guard(|| {
        let (t, f) = (&borrow(t)?.0, &borrow(f)?.0);
        if trace.is_null() {
            return fail(TtStatus::NullPointer, "null output pointer");
        }
        let limits = Limits { max_steps: (max_steps > 0).then_some(max_steps) };
        let run = engine::run_folding(t, f, &limits).or_else(|e| fail(TtStatus::Invalid, e))?;
        put_json(trace, &run.trace)?;
        match &run.trace.outcome {
            Outcome::IndexJump { site, missing_datum } => fail(TtStatus::IndexJump, format!("{site}: {missing_datum}")),
            Outcome::StepCapReached { cap } => fail(TtStatus::StepCap, format!("step cap {cap} reached")),
            _ => Ok(()),
        }
    })
}

/// Height of the free factor system with the given ranks in `F_ambient`.
///
/// # Safety
/// `ranks` points to `len` values (or is null with `len == 0`); `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn tt_height(ranks: *const usize, len: usize, ambient: usize, out: *mut usize) -> TtStatus {
    guard(|| {
        let ranks = if len == 0 {
            Vec::new()
        } else if ranks.is_null() {
            return fail(TtStatus::NullPointer, "null ranks");
        } else {
            std::slice::from_raw_parts(ranks, len).to_vec()
        };
        let a = FreeFactorSystem::new(ranks, ambient);
        if !a.is_well_formed() {
            return fail(TtStatus::Invalid, "ranks exceed the ambient rank");
        }
        put(out, index::height(&a))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    #[test]
    fn null_inputs_are_reported() {
        unsafe {
            let mut g = ptr::null_mut();
            assert_eq!(tt_graph_from_json(ptr::null(), &mut g), TtStatus::NullPointer);
            assert_eq!(tt_track_is_admissible(ptr::null()), TtStatus::NullPointer);
            let msg = CStr::from_ptr(tt_last_error()).to_str().unwrap();
            assert_eq!(msg, "null handle");
        }
    }
}
