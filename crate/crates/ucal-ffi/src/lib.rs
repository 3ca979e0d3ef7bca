//! C ABI for the `ucal` forecast-evaluation library.
//!
//! Conventions: every fallible function returns a `ucal_status` code and
//! writes its result through out-pointers only on success; `UCAL_STATUS_OK`
//! is zero. The most recent failure message is kept per thread and fetched
//! with [`ucal_last_error_message`]. Transcripts are opaque handles created
//! and released through this interface; strings returned by the library are
//! released with [`ucal_string_free`].

#![allow(non_camel_case_types)]

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::path::Path;

use libc::{c_char, c_double, size_t};

use ucal::error::Error;
use ucal::fixtures;
use ucal::forecasters;
use ucal::metrics::{self, RegretReport, Transcript};
use ucal::scoring::RuleSpec;
use ucal::ucal_lp::{self, LpOptions, LpStatus};

/// Result codes; zero is success.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ucal_status {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SolverFailure = 3,
    ParseError = 4,
    IoError = 5,
}

/// Opaque transcript handle.
pub struct ucal_transcript {
    inner: Transcript,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn fail(status: ucal_status, message: impl AsRef<str>) -> ucal_status {
    let msg = CString::new(message.as_ref().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
    status
}

fn fail_with(e: Error) -> ucal_status {
    let status = match &e {
        Error::Validation(_) | Error::ArityMismatch { .. } => ucal_status::InvalidArgument,
        Error::Solver(_) => ucal_status::SolverFailure,
        Error::Parse(_) => ucal_status::ParseError,
        Error::Io(_) => ucal_status::IoError,
    };
    fail(status, e.to_string())
}

/// # Safety
/// `ptr` must be a valid transcript handle from this library or null.
unsafe fn borrow<'a>(ptr: *const ucal_transcript) -> Option<&'a Transcript> {
    ptr.as_ref().map(|t| &t.inner)
}

fn export(t: Transcript, out: *mut *mut ucal_transcript) -> ucal_status {
    let handle = Box::new(ucal_transcript { inner: t });
    unsafe { *out = Box::into_raw(handle) };
    ucal_status::Ok
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ucal_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the most recent failure on this thread, or null. The caller
/// frees the returned string with `ucal_string_free`.
#[no_mangle]
pub extern "C" fn ucal_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(msg) => msg.clone().into_raw(),
        None => std::ptr::null_mut(),
    })
}

/// Releases a string allocated by this library. Null is a no-op.
///
/// # Safety
/// `s` must have been returned by this library and not freed before.
#[no_mangle]
pub unsafe extern "C" fn ucal_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a binary transcript from `len` predicted probabilities of outcome 1
/// and `len` outcomes in `{0, 1}`.
///
/// # Safety
/// `predictions` and `outcomes` must point to `len` readable elements;
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ucal_transcript_new_binary(
    predictions: *const c_double,
    outcomes: *const u8,
    len: size_t,
    out: *mut *mut ucal_transcript,
) -> ucal_status {
    clear_error();
    if predictions.is_null() || outcomes.is_null() || out.is_null() {
        return fail(ucal_status::NullPointer, "null argument");
    }
    let preds = std::slice::from_raw_parts(predictions, len).to_vec();
    let outs = std::slice::from_raw_parts(outcomes, len).to_vec();
    match Transcript::binary(preds, outs) {
        Ok(t) => export(t, out),
        Err(e) => fail_with(e),
    }
}

/// Builds a multiclass transcript from `len * arity` row-major simplex
/// predictions and `len` outcomes in `0..arity`.
///
/// # Safety
/// `predictions` must point to `len * arity` readable doubles, `outcomes`
/// to `len` readable elements; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ucal_transcript_new_multiclass(
    arity: size_t,
    predictions: *const c_double,
    outcomes: *const u32,
    len: size_t,
    out: *mut *mut ucal_transcript,
) -> ucal_status {
    clear_error();
    if predictions.is_null() || outcomes.is_null() || out.is_null() {
        return fail(ucal_status::NullPointer, "null argument");
    }
    let preds = std::slice::from_raw_parts(predictions, len * arity).to_vec();
    let outs: Vec<usize> =
        std::slice::from_raw_parts(outcomes, len).iter().map(|&x| x as usize).collect();
    match Transcript::multiclass(arity, preds, outs) {
        Ok(t) => export(t, out),
        Err(e) => fail_with(e),
    }
}

unsafe fn path_from(ptr: *const c_char) -> Result<String, ucal_status> {
    if ptr.is_null() {
        return Err(fail(ucal_status::NullPointer, "null path"));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map(|s| s.to_string())
        .map_err(|_| fail(ucal_status::ParseError, "path is not valid utf-8"))
}

/// Reads a transcript CSV (`t,x,p` or `t,x,p_1..p_K`).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ucal_transcript_read_csv(
    path: *const c_char,
    out: *mut *mut ucal_transcript,
) -> ucal_status {
    clear_error();
    if out.is_null() {
        return fail(ucal_status::NullPointer, "null out pointer");
    }
    let path = match path_from(path) {
        Ok(p) => p,
        Err(status) => return status,
    };
    match ucal::io::read_transcript_file(Path::new(&path)) {
        Ok(t) => export(t, out),
        Err(e) => fail_with(e),
    }
}

/// Writes the transcript in the canonical CSV format.
///
/// # Safety
/// `t` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ucal_transcript_write_csv(
    t: *const ucal_transcript,
    path: *const c_char,
) -> ucal_status {
    clear_error();
    let Some(t) = borrow(t) else {
        return fail(ucal_status::NullPointer, "null transcript");
    };
    let path = match path_from(path) {
        Ok(p) => p,
        Err(status) => return status,
    };
    match ucal::io::write_transcript_file(Path::new(&path), t) {
        Ok(()) => ucal_status::Ok,
        Err(e) => fail_with(e),
    }
}

/// Releases a transcript handle. Null is a no-op.
///
/// # Safety
/// `t` must have come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ucal_transcript_free(t: *mut ucal_transcript) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of rounds, or 0 for a null handle.
///
/// # Safety
/// `t` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ucal_transcript_len(t: *const ucal_transcript) -> size_t {
    borrow(t).map_or(0, |t| t.len())
}

/// Outcome arity, or 0 for a null handle.
///
/// # Safety
/// `t` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ucal_transcript_arity(t: *const ucal_transcript) -> size_t {
    borrow(t).map_or(0, |t| t.arity())
}

unsafe fn metric_out(
    t: *const ucal_transcript,
    out: *mut c_double,
    f: impl FnOnce(&Transcript) -> Result<f64, Error>,
) -> ucal_status {
    clear_error();
    if out.is_null() {
        return fail(ucal_status::NullPointer, "null out pointer");
    }
    let Some(t) = borrow(t) else {
        return fail(ucal_status::NullPointer, "null transcript");
    };
    match f(t) {
        Ok(v) => {
            *out = v;
            ucal_status::Ok
        }
        Err(e) => fail_with(e),
    }
}

/// Base-rate regret under the quadratic (Brier) rule; the multiclass squared
/// distance is used for arity above two.
///
/// # Safety
/// `t` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ucal_reg_brier(
    t: *const ucal_transcript,
    out: *mut c_double,
) -> ucal_status {
    metric_out(t, out, |t| metrics::reg(&RuleSpec::Brier.to_bivariate(t.arity())?, t))
}

/// L1 calibration error (binary transcripts).
///
/// # Safety
/// `t` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ucal_cal_l1(
    t: *const ucal_transcript,
    out: *mut c_double,
) -> ucal_status {
    metric_out(t, out, metrics::cal_l1)
}

/// L2 calibration error (binary transcripts).
///
/// # Safety
/// `t` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ucal_cal_l2(
    t: *const ucal_transcript,
    out: *mut c_double,
) -> ucal_status {
    metric_out(t, out, metrics::cal_l2)
}

/// Vector (per-outcome) L1 calibration error; defined at every arity.
///
/// # Safety
/// `t` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ucal_cal_l1_multiclass(
    t: *const ucal_transcript,
    out: *mut c_double,
) -> ucal_status {
    metric_out(t, out, |t| Ok(metrics::cal_l1_multiclass(t)))
}

/// Regret of the V-shaped rule centered at `v` (binary transcripts).
///
/// # Safety
/// `t` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ucal_vreg(
    t: *const ucal_transcript,
    v: c_double,
    out: *mut c_double,
) -> ucal_status {
    metric_out(t, out, |t| metrics::vreg(v, t))
}

/// V-calibration error (binary transcripts); when `witness_v` is non-null it
/// receives the center approaching the supremum.
///
/// # Safety
/// `t` must be a live handle; `value` valid; `witness_v` valid or null.
#[no_mangle]
pub unsafe extern "C" fn ucal_vcal(
    t: *const ucal_transcript,
    value: *mut c_double,
    witness_v: *mut c_double,
) -> ucal_status {
    clear_error();
    if value.is_null() {
        return fail(ucal_status::NullPointer, "null out pointer");
    }
    let Some(t) = borrow(t) else {
        return fail(ucal_status::NullPointer, "null transcript");
    };
    match metrics::vcal(t) {
        Ok((v, witness)) => {
            *value = v;
            if !witness_v.is_null() {
                *witness_v = witness.v;
            }
            ucal_status::Ok
        }
        Err(e) => fail_with(e),
    }
}

/// Weak-calibration witness value for the spike test function
/// `w(p) = max(0.1 - |0.75 - p|, 0)` (binary transcripts).
///
/// # Safety
/// `t` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ucal_weak_cal_spike(
    t: *const ucal_transcript,
    out: *mut c_double,
) -> ucal_status {
    metric_out(t, out, |t| metrics::weak_cal_witness(t, metrics::spike_witness))
}

/// U-calibration error: the exact maximum base-rate regret over all bounded
/// proper scoring rules, by linear programming. `epsilon` is the optimality
/// tolerance on reduced costs (pass 0 for the default 1e-9).
///
/// # Safety
/// `t` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ucal_max_agent_reg(
    t: *const ucal_transcript,
    epsilon: c_double,
    out: *mut c_double,
) -> ucal_status {
    metric_out(t, out, |t| {
        let opts = LpOptions {
            epsilon: if epsilon > 0.0 { epsilon } else { 1e-9 },
            ..LpOptions::default()
        };
        let sol = ucal_lp::max_agent_reg(t, &opts)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::Solver(format!(
                "no convergence after {} pivots; bounds [{}, {}]",
                sol.iterations, sol.value, sol.upper_bound
            )));
        }
        Ok(sol.value)
    })
}

/// JSON description of the optimal witness scoring rule (anchor table).
/// The caller frees the string with `ucal_string_free`.
///
/// # Safety
/// `t` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ucal_max_agent_reg_witness_json(
    t: *const ucal_transcript,
    epsilon: c_double,
    out: *mut *mut c_char,
) -> ucal_status {
    clear_error();
    if out.is_null() {
        return fail(ucal_status::NullPointer, "null out pointer");
    }
    let Some(t) = borrow(t) else {
        return fail(ucal_status::NullPointer, "null transcript");
    };
    let opts = LpOptions {
        epsilon: if epsilon > 0.0 { epsilon } else { 1e-9 },
        ..LpOptions::default()
    };
    match ucal_lp::max_agent_reg(t, &opts) {
        Ok(sol) if sol.status == LpStatus::Optimal => {
            let json = CString::new(sol.table.to_json()).unwrap_or_default();
            *out = json.into_raw();
            ucal_status::Ok
        }
        Ok(sol) => fail(
            ucal_status::SolverFailure,
            format!("no convergence after {} pivots", sol.iterations),
        ),
        Err(e) => fail_with(e),
    }
}

/// Standard metric report as a JSON string (same schema as the CLI
/// `metrics` subcommand). The caller frees it with `ucal_string_free`.
///
/// # Safety
/// `t` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ucal_report_json(
    t: *const ucal_transcript,
    out: *mut *mut c_char,
) -> ucal_status {
    clear_error();
    if out.is_null() {
        return fail(ucal_status::NullPointer, "null out pointer");
    }
    let Some(t) = borrow(t) else {
        return fail(ucal_status::NullPointer, "null transcript");
    };
    let build = || -> Result<RegretReport, Error> {
        let mut report = RegretReport::new(t);
        report.push("reg_brier", metrics::reg(&RuleSpec::Brier.to_bivariate(t.arity())?, t)?);
        if t.is_binary() {
            report.push("cal", metrics::cal_l1(t)?);
            report.push("cal2", metrics::cal_l2(t)?);
            let (vc, witness) = metrics::vcal(t)?;
            report.push("vcal", vc);
            report.push("vcal_witness_v", witness.v);
        } else {
            report.push("cal", metrics::cal_l1_multiclass(t));
        }
        Ok(report)
    };
    match build() {
        Ok(report) => {
            let json = CString::new(report.to_json()).unwrap_or_default();
            *out = json.into_raw();
            ucal_status::Ok
        }
        Err(e) => fail_with(e),
    }
}

/// Runs the randomized binary forecaster against a fixed outcome sequence
/// with learning rate `1/sqrt(len)`.
///
/// # Safety
/// `outcomes` must point to `len` readable elements; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ucal_run_hedge(
    outcomes: *const u8,
    len: size_t,
    seed: u64,
    out: *mut *mut ucal_transcript,
) -> ucal_status {
    clear_error();
    if outcomes.is_null() || out.is_null() {
        return fail(ucal_status::NullPointer, "null argument");
    }
    let outs = std::slice::from_raw_parts(outcomes, len);
    match forecasters::run_oblivious(&forecasters::ForecasterKind::Hedge { eta: None }, outs, seed)
    {
        Ok(t) => export(t, out),
        Err(e) => fail_with(e),
    }
}

/// Runs the perturbed-leader multiclass forecaster against a fixed outcome
/// sequence.
///
/// # Safety
/// `outcomes` must point to `len` readable elements; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ucal_run_ftpl(
    outcomes: *const u32,
    len: size_t,
    arity: size_t,
    seed: u64,
    out: *mut *mut ucal_transcript,
) -> ucal_status {
    clear_error();
    if outcomes.is_null() || out.is_null() {
        return fail(ucal_status::NullPointer, "null argument");
    }
    let outs: Vec<usize> =
        std::slice::from_raw_parts(outcomes, len).iter().map(|&x| x as usize).collect();
    match forecasters::run_oblivious_multiclass(&outs, arity, seed) {
        Ok(t) => export(t, out),
        Err(e) => fail_with(e),
    }
}

/// Generates a named reference fixture's transcript (see the CLI `example
/// --name list` for the catalogue).
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ucal_fixture_generate(
    name: *const c_char,
    t_len: size_t,
    out: *mut *mut ucal_transcript,
) -> ucal_status {
    clear_error();
    if out.is_null() {
        return fail(ucal_status::NullPointer, "null out pointer");
    }
    let name = match path_from(name) {
        Ok(n) => n,
        Err(status) => return status,
    };
    match fixtures::generate(&name, t_len) {
        Ok(fixture) => export(fixture.transcript, out),
        Err(e) => fail_with(e),
    }
}
