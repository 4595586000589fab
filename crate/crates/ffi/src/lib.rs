//! C ABI for the copydraw toolkit.
//!
//! Sessions and markers are opaque handles owned by the caller and
//! released with their `*_free` function. Every fallible call returns a
//! [`CdStatus`]; on failure the message is kept per thread and read with
//! [`cd_last_error_message`]. Matrices are passed row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use copydraw::dtw::{align, TaskPerformance};
use copydraw::evaluation::{copydraw_scores, FittedMarker};
use copydraw::io::load_session;
use copydraw::kinematics::FeatureSet;
use copydraw::model::{NeuralEpoch, Point, Session};
use copydraw::nalgebra::DMatrix;
use copydraw::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Bad input: missing file, schema or invariant violation, bad spec.
    Validation = 3,
    /// A computation failed on valid input.
    Runtime = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdFeatureSet {
    Standard = 0,
    Extended = 1,
    Angular = 2,
}

impl From<CdFeatureSet> for FeatureSet {
    fn from(f: CdFeatureSet) -> Self {
        match f {
            CdFeatureSet::Standard => FeatureSet::Standard,
            CdFeatureSet::Extended => FeatureSet::Extended,
            CdFeatureSet::Angular => FeatureSet::Angular,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdTaskPerformance {
    pub fraction_matched: f64,
    pub mean_distance: f64,
    /// `+inf` for a perfect copy.
    pub value: f64,
    pub n_matched: usize,
    pub total_cost: f64,
}

/// Opaque loaded session.
pub struct CdSession(Session);

/// Opaque frozen neural marker.
pub struct CdMarker(FittedMarker);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: CdStatus, message: impl Into<String>) -> CdStatus {
    set_error(message);
    status
}

fn from_error(e: Error) -> CdStatus {
    let status = if e.is_validation() { CdStatus::Validation } else { CdStatus::Runtime };
    fail(status, e.to_string())
}

/// Runs `body`, turning panics into [`CdStatus::Panic`].
fn guarded(body: impl FnOnce() -> CdStatus) -> CdStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(CdStatus::Panic, msg)
        }
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(CdStatus::NullPointer, concat!(stringify!($p), " is null"));
        })+
    };
}

unsafe fn points(xy: *const f64, n: usize) -> Vec<Point> {
    let flat: &[f64] = if n == 0 { &[] } else { std::slice::from_raw_parts(xy, 2 * n) };
    flat.chunks_exact(2).map(|p| [p[0], p[1]]).collect()
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn cd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a session from its manifest file.
///
/// # Safety
/// `manifest_path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cd_session_load(manifest_path: *const c_char, out: *mut *mut CdSession) -> CdStatus {
    guarded(|| {
        non_null!(manifest_path, out);
        let Ok(path) = CStr::from_ptr(manifest_path).to_str() else {
            return fail(CdStatus::InvalidUtf8, "manifest_path is not UTF-8");
        };
        match load_session(path) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(CdSession(s)));
                CdStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `session` must come from [`cd_session_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cd_session_free(session: *mut CdSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Number of blocks and of non-excluded trials.
///
/// # Safety
/// `session` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn cd_session_counts(
    session: *const CdSession,
    n_blocks: *mut usize,
    n_trials: *mut usize,
) -> CdStatus {
    guarded(|| {
        non_null!(session, n_blocks, n_trials);
        let s = &(*session).0;
        *n_blocks = s.blocks().len();
        *n_trials = s.included_trials().len();
        CdStatus::Ok
    })
}

/// CopyDraw score of every non-excluded trial, in session order. With
/// `out` null only `written` is filled, so callers can size the buffer.
///
/// # Safety
/// `out` must hold `capacity` doubles when not null; `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cd_copydraw_scores(
    session: *const CdSession,
    feature_set: CdFeatureSet,
    out: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> CdStatus {
    guarded(|| {
        non_null!(session, written);
        let s = &(*session).0;
        if out.is_null() {
            *written = s.included_trials().len();
            return CdStatus::Ok;
        }
        match copydraw_scores(s, feature_set.into()) {
            Ok(scores) => {
                *written = scores.len();
                if scores.len() > capacity {
                    return fail(CdStatus::BufferTooSmall, format!("need {} values", scores.len()));
                }
                std::slice::from_raw_parts_mut(out, scores.len()).copy_from_slice(&scores);
                CdStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Parses a marker exported by `neural-decode`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cd_marker_from_json(json: *const c_char, out: *mut *mut CdMarker) -> CdStatus {
    guarded(|| {
        non_null!(json, out);
        let Ok(text) = CStr::from_ptr(json).to_str() else {
            return fail(CdStatus::InvalidUtf8, "marker json is not UTF-8");
        };
        match FittedMarker::from_json(text, "marker") {
            Ok(m) => {
                *out = Box::into_raw(Box::new(CdMarker(m)));
                CdStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `marker` must come from [`cd_marker_from_json`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cd_marker_free(marker: *mut CdMarker) {
    if !marker.is_null() {
        drop(Box::from_raw(marker));
    }
}

/// # Safety
/// `marker` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn cd_marker_shape(
    marker: *const CdMarker,
    n_channels: *mut usize,
    sample_rate: *mut f64,
) -> CdStatus {
    guarded(|| {
        non_null!(marker, n_channels, sample_rate);
        let m = &(*marker).0;
        *n_channels = m.n_channels();
        *sample_rate = m.sample_rate;
        CdStatus::Ok
    })
}

/// Predicted behavioral score of one epoch (`n_channels × n_samples`,
/// row-major) sampled at the marker's rate.
///
/// # Safety
/// `data` must hold `n_channels * n_samples` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cd_marker_predict(
    marker: *const CdMarker,
    data: *const f64,
    n_channels: usize,
    n_samples: usize,
    out: *mut f64,
) -> CdStatus {
    guarded(|| {
        non_null!(marker, data, out);
        let m = &(*marker).0;
        if n_channels != m.n_channels() {
            return fail(
                CdStatus::Validation,
                format!("marker expects {} channels, got {n_channels}", m.n_channels()),
            );
        }
        let values = std::slice::from_raw_parts(data, n_channels * n_samples);
        let matrix = DMatrix::from_row_slice(n_channels, n_samples, values);
        let epoch = match NeuralEpoch::new(matrix, m.sample_rate, m.channel_names.clone(), m.modality) {
            Ok(e) => e,
            Err(e) => return from_error(e),
        };
        match m.predict(&epoch) {
            Ok(v) => {
                *out = v;
                CdStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Open-ended DTW of a trace against a template, both as `n` interleaved
/// `x, y` pairs, and the resulting task performance.
///
/// # Safety
/// `trace_xy` and `template_xy` must hold `2 * n` doubles each; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cd_task_performance(
    trace_xy: *const f64,
    n_trace: usize,
    template_xy: *const f64,
    n_template: usize,
    out: *mut CdTaskPerformance,
) -> CdStatus {
    guarded(|| {
        non_null!(trace_xy, template_xy, out);
        let template = points(template_xy, n_template);
        match align(&points(trace_xy, n_trace), &template) {
            Ok(a) => {
                let perf = TaskPerformance::from_alignment(&a, template.len());
                *out = CdTaskPerformance {
                    fraction_matched: perf.fraction_matched,
                    mean_distance: perf.mean_distance,
                    value: perf.value,
                    n_matched: a.n_c,
                    total_cost: a.total_cost,
                };
                CdStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
