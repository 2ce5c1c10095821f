//! C ABI over the `trifree` simulator.
//!
//! Every fallible function returns a [`TrifreeStatus`] code; on failure the
//! message is available from [`trifree_last_error`] on the same thread.
//! Handles are opaque and released with their `_free` function. Panics never
//! cross the boundary; they surface as `TRIFREE_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use trifree::process::ProcessState;
use trifree::scaling::{self, ScalingContext, VariableKind};
use trifree::stacking::StackingWord;
use trifree::{Error, PairStatus};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrifreeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Precondition = 3,
    Terminated = 4,
    Refused = 5,
    Parse = 6,
    Io = 7,
    Internal = 8,
}

/// Named variables accepted by [`trifree_scaling`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrifreeVariable {
    Q = 0,
    R = 1,
    S = 2,
    Xuv = 3,
    Yuv = 4,
    Xu = 5,
    Yu = 6,
}

/// Counters of a process handle.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrifreeCounts {
    pub n: u32,
    pub steps: u64,
    pub edges: u64,
    pub open: u64,
    pub closed: u64,
}

/// An opaque process run.
pub struct TrifreeProcess {
    state: ProcessState,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn code_of(e: &Error) -> TrifreeStatus {
    match e {
        Error::InvalidArgument(_) => TrifreeStatus::InvalidArgument,
        Error::Precondition(_) => TrifreeStatus::Precondition,
        Error::Terminated => TrifreeStatus::Terminated,
        Error::Refused(_) => TrifreeStatus::Refused,
        Error::Parse(_) | Error::Config(_) | Error::Json(_) => TrifreeStatus::Parse,
        Error::Io(_) => TrifreeStatus::Io,
        _ => TrifreeStatus::Internal,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (TrifreeStatus, String)>) -> TrifreeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TrifreeStatus::Ok,
        Ok(Err((code, msg))) => {
            set_error(&msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            TrifreeStatus::Internal
        }
    }
}

fn lift<T>(r: trifree::Result<T>) -> Result<T, (TrifreeStatus, String)> {
    r.map_err(|e| (code_of(&e), e.to_string()))
}

fn null(what: &str) -> (TrifreeStatus, String) {
    (TrifreeStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (TrifreeStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (TrifreeStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Message of the last failure on this thread; empty if none. Valid until
/// the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn trifree_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Starts a run on `n` vertices with `seed`; stores the handle in `*out`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn trifree_process_new(n: u32, seed: u64, out: *mut *mut TrifreeProcess) -> TrifreeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let mut state = lift(ProcessState::new(n, seed))?;
        state.set_history(false);
        *out = Box::into_raw(Box::new(TrifreeProcess { state }));
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `p` must be null or a handle from [`trifree_process_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn trifree_process_free(p: *mut TrifreeProcess) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Adds one uniformly random open pair and reports it in `*u < *v`.
/// Returns `TRIFREE_TERMINATED` when no open pair remains.
///
/// # Safety
/// `p` must be a live handle; `u` and `v` may be null.
#[no_mangle]
pub unsafe extern "C" fn trifree_process_step(p: *mut TrifreeProcess, u: *mut u32, v: *mut u32) -> TrifreeStatus {
    guard(|| {
        let h = p.as_mut().ok_or_else(|| null("process"))?;
        let e = lift(h.state.step())?;
        if !u.is_null() {
            *u = e.u;
        }
        if !v.is_null() {
            *v = e.v;
        }
        Ok(())
    })
}

/// Runs to termination; writes the final edge count to `*edges` if non-null.
///
/// # Safety
/// `p` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn trifree_process_run(p: *mut TrifreeProcess, edges: *mut u64) -> TrifreeStatus {
    guard(|| {
        let h = p.as_mut().ok_or_else(|| null("process"))?;
        let r = lift(
            h.state
                .run_to_completion(&trifree::process::SnapshotSchedule::none(), &mut trifree::process::NoSink),
        )?;
        if !edges.is_null() {
            *edges = r.final_edges;
        }
        Ok(())
    })
}

/// Status of pair `{u, v}`: 0 open, 1 edge, 2 closed.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn trifree_process_status(
    p: *const TrifreeProcess,
    u: u32,
    v: u32,
    out: *mut u32,
) -> TrifreeStatus {
    guard(|| {
        let h = p.as_ref().ok_or_else(|| null("process"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = match lift(h.state.store().status(u, v))? {
            PairStatus::Open => 0,
            PairStatus::Edge => 1,
            PairStatus::Closed => 2,
        };
        Ok(())
    })
}

/// Current counters.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn trifree_process_counts(p: *const TrifreeProcess, out: *mut TrifreeCounts) -> TrifreeStatus {
    guard(|| {
        let h = p.as_ref().ok_or_else(|| null("process"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = h.state.store();
        *out = TrifreeCounts {
            n: s.n(),
            steps: h.state.steps(),
            edges: s.edge_count(),
            open: s.open_count(),
            closed: s.closed_count(),
        };
        Ok(())
    })
}

/// Writes the edge list (`u v` per line, insertion order) to `path`.
///
/// # Safety
/// `p` must be a live handle and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn trifree_process_write_edges(p: *const TrifreeProcess, path: *const c_char) -> TrifreeStatus {
    guard(|| {
        let h = p.as_ref().ok_or_else(|| null("process"))?;
        let path = str_arg(path, "path")?;
        let bytes = h.state.store().edge_list_string();
        lift(trifree::experiment::atomic_write(std::path::Path::new(path), bytes.as_bytes()))
    })
}

/// Number of embeddings of stacking word `word` rooted at `(u, v)` in the
/// current graph.
///
/// # Safety
/// `p` must be a live handle, `word` nul-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn trifree_stacking_count(
    p: *const TrifreeProcess,
    word: *const c_char,
    u: u32,
    v: u32,
    out: *mut u64,
) -> TrifreeStatus {
    guard(|| {
        let h = p.as_ref().ok_or_else(|| null("process"))?;
        let w: StackingWord = lift(str_arg(word, "word")?.parse())?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = lift(w.count(h.state.store(), u, v))?;
        Ok(())
    })
}

/// Weights `w1` and `w2` of a stacking word.
///
/// # Safety
/// `word` must be nul-terminated; `w1`, `w2` writable.
#[no_mangle]
pub unsafe extern "C" fn trifree_stacking_weights(word: *const c_char, w1: *mut u32, w2: *mut u32) -> TrifreeStatus {
    guard(|| {
        let w: StackingWord = lift(str_arg(word, "word")?.parse())?;
        if w1.is_null() || w2.is_null() {
            return Err(null("w1/w2"));
        }
        let ws = w.weights();
        *w1 = ws.w1 as u32;
        *w2 = ws.w2 as u32;
        Ok(())
    })
}

/// Scaling of a named variable at size `n` and time `t`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn trifree_scaling(kind: TrifreeVariable, n: f64, t: f64, out: *mut f64) -> TrifreeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let k = match kind {
            TrifreeVariable::Q => VariableKind::Q,
            TrifreeVariable::R => VariableKind::R,
            TrifreeVariable::S => VariableKind::S,
            TrifreeVariable::Xuv => VariableKind::Xuv,
            TrifreeVariable::Yuv => VariableKind::Yuv,
            TrifreeVariable::Xu => VariableKind::Xu,
            TrifreeVariable::Yu => VariableKind::Yu,
        };
        let ctx = lift(ScalingContext::at_time(n, t))?;
        *out = lift(scaling::scaling_of(&k, &ctx))?;
        Ok(())
    })
}

/// Largest tracked time for size `n` and exponent slack `epsilon`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn trifree_t_max(n: f64, epsilon: f64, out: *mut f64) -> TrifreeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = lift(scaling::t_max(n, epsilon))?;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn last_error() -> String {
        unsafe { CStr::from_ptr(trifree_last_error()) }.to_string_lossy().into_owned()
    }

    #[test]
    fn lifecycle() {
        unsafe {
            let mut p = ptr::null_mut();
            assert_eq!(trifree_process_new(3, 1, &mut p), TrifreeStatus::Ok);
            let (mut u, mut v) = (0, 0);
            assert_eq!(trifree_process_step(p, &mut u, &mut v), TrifreeStatus::Ok);
            assert!(u < v && v < 3);
            let mut s = 9;
            assert_eq!(trifree_process_status(p, u, v, &mut s), TrifreeStatus::Ok);
            assert_eq!(s, 1);
            let mut edges = 0;
            assert_eq!(trifree_process_run(p, &mut edges), TrifreeStatus::Ok);
            assert_eq!(edges, 2);
            assert_eq!(trifree_process_step(p, ptr::null_mut(), ptr::null_mut()), TrifreeStatus::Terminated);
            assert!(!last_error().is_empty());
            let mut c = TrifreeCounts::default();
            assert_eq!(trifree_process_counts(p, &mut c), TrifreeStatus::Ok);
            assert_eq!((c.n, c.steps, c.edges, c.open, c.closed), (3, 2, 2, 0, 1));
            assert_eq!(trifree_process_status(p, 0, 3, &mut s), TrifreeStatus::InvalidArgument);
            trifree_process_free(p);
            trifree_process_free(ptr::null_mut());
        }
    }

    #[test]
    fn errors() {
        unsafe {
            assert_eq!(trifree_process_new(3, 1, ptr::null_mut()), TrifreeStatus::NullPointer);
            let mut p = ptr::null_mut();
            assert_eq!(trifree_process_new(1, 1, &mut p), TrifreeStatus::InvalidArgument);
            assert!(p.is_null());
            assert_eq!(trifree_process_run(ptr::null_mut(), ptr::null_mut()), TrifreeStatus::NullPointer);
            let (mut a, mut b) = (0, 0);
            let bad = CString::new("QQ").unwrap();
            assert_eq!(trifree_stacking_weights(bad.as_ptr(), &mut a, &mut b), TrifreeStatus::Parse);
            assert!(last_error().contains("QQ"));
        }
    }

    #[test]
    fn helpers() {
        unsafe {
            let w = CString::new("XO YO O YI XI E").unwrap();
            let (mut a, mut b) = (0, 0);
            assert_eq!(trifree_stacking_weights(w.as_ptr(), &mut a, &mut b), TrifreeStatus::Ok);
            let ws: StackingWord = "XO YO O YI XI E".parse().unwrap();
            assert_eq!((a as usize, b as usize), (ws.weights().w1 as usize, ws.weights().w2 as usize));
            let mut x = 0.0;
            assert_eq!(trifree_scaling(TrifreeVariable::Q, 1e4, 1.0, &mut x), TrifreeStatus::Ok);
            let ctx = ScalingContext::at_time(1e4, 1.0).unwrap();
            assert_eq!(x, ctx.q());
            assert_eq!(trifree_t_max(1e6, 0.1, &mut x), TrifreeStatus::Ok);
            assert!((x - 1.175394).abs() < 1e-6);

            let mut p = ptr::null_mut();
            assert_eq!(trifree_process_new(30, 5, &mut p), TrifreeStatus::Ok);
            assert_eq!(trifree_process_run(p, ptr::null_mut()), TrifreeStatus::Ok);
            let yo = CString::new("YO").unwrap();
            let mut c = 0;
            assert_eq!(trifree_stacking_count(p, yo.as_ptr(), 0, 1, &mut c), TrifreeStatus::Ok);
            let (_, _, y_vu) = trifree::tracker::codegree((*p).state.store(), 0, 1).unwrap();
            assert_eq!(c, y_vu);
            let dir = std::env::temp_dir().join(format!("trifree_ffi_{}", std::process::id()));
            let path = CString::new(dir.join("edges.txt").to_str().unwrap()).unwrap();
            assert_eq!(trifree_process_write_edges(p, path.as_ptr()), TrifreeStatus::Ok);
            let text = std::fs::read_to_string(dir.join("edges.txt")).unwrap();
            assert_eq!(text, (*p).state.store().edge_list_string());
            std::fs::remove_dir_all(dir).unwrap();
            trifree_process_free(p);
        }
    }
}
