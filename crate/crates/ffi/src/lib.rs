//! C interface to the analyzer.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `fj_*_free` function. Strings returned by the library are
//! released with [`fj_string_free`]. When a call fails, [`fj_last_error`]
//! describes the failure until the next call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fjeucs::contexts;
use fjeucs::infer::InferError;
use fjeucs::parser::{parse_policy, parse_program};
use fjeucs::policy::Policy;
use fjeucs::report::{check_program, Report};
use fjeucs::syntax::Program;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FjStatus {
    Ok = 0,
    /// The analysis finished and found a disallowed effect.
    Violation = 1,
    ParseError = 2,
    /// Type error or unknown entry point.
    AnalysisError = 3,
    InvalidArgument = 4,
    Internal = 5,
}

pub struct FjProgram(Program);

pub struct FjPolicy(Policy);

pub struct FjReport {
    report: Report,
    json: CString,
    text: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).unwrap_or_default());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::default());
}

fn guard(f: impl FnOnce() -> Result<FjStatus, (FjStatus, String)>) -> FjStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("panic inside the analyzer");
            FjStatus::Internal
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, (FjStatus, String)> {
    if p.is_null() {
        return Err((FjStatus::InvalidArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (FjStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Parses program source into `*out`.
///
/// # Safety
/// `src` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fj_parse_program(src: *const c_char, out: *mut *mut FjProgram) -> FjStatus {
    guard(|| {
        if out.is_null() {
            return Err((FjStatus::InvalidArgument, "out is null".into()));
        }
        *out = ptr::null_mut();
        let p = parse_program(text(src, "src")?).map_err(|e| (FjStatus::ParseError, e.to_string()))?;
        *out = Box::into_raw(Box::new(FjProgram(p)));
        Ok(FjStatus::Ok)
    })
}

/// Parses a policy file's contents into `*out`.
///
/// # Safety
/// `src` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fj_parse_policy(src: *const c_char, out: *mut *mut FjPolicy) -> FjStatus {
    guard(|| {
        if out.is_null() {
            return Err((FjStatus::InvalidArgument, "out is null".into()));
        }
        *out = ptr::null_mut();
        let p = parse_policy(text(src, "src")?).map_err(|e| (FjStatus::ParseError, e.to_string()))?;
        *out = Box::into_raw(Box::new(FjPolicy(p)));
        Ok(FjStatus::Ok)
    })
}

/// Analyzes `entry` (`Class.method`) and stores the report in `*out`.
/// `context_policy` is `"kcfa"` (using `k`) or `"constant"`; null means
/// `"kcfa"`. Returns `Ok` or `Violation` when a report was produced.
///
/// # Safety
/// Handles must come from this library; strings must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn fj_check(
    program: *const FjProgram,
    policy: *const FjPolicy,
    entry: *const c_char,
    context_policy: *const c_char,
    k: u32,
    out: *mut *mut FjReport,
) -> FjStatus {
    guard(|| {
        if out.is_null() || program.is_null() || policy.is_null() {
            return Err((FjStatus::InvalidArgument, "null handle".into()));
        }
        *out = ptr::null_mut();
        let entry = text(entry, "entry")?;
        let cp_name = if context_policy.is_null() {
            "kcfa"
        } else {
            text(context_policy, "context_policy")?
        };
        let cp = contexts::by_name(cp_name, k as usize).ok_or_else(|| {
            (FjStatus::InvalidArgument, format!("unknown context policy `{cp_name}`"))
        })?;
        let (report, _) = check_program(&(*program).0, &(*policy).0, cp.as_ref(), entry).map_err(|e| {
            let s = match e {
                InferError::Internal(_) => FjStatus::Internal,
                _ => FjStatus::AnalysisError,
            };
            (s, e.to_string())
        })?;
        let status = if report.is_compliant() {
            FjStatus::Ok
        } else {
            FjStatus::Violation
        };
        let json = CString::new(report.to_json()).unwrap_or_default();
        let text = CString::new(report.render_text()).unwrap_or_default();
        *out = Box::into_raw(Box::new(FjReport { report, json, text }));
        Ok(status)
    })
}

/// 1 if compliant, 0 if not, -1 for a null handle.
///
/// # Safety
/// `report` must come from [`fj_check`] or be null.
#[no_mangle]
pub unsafe extern "C" fn fj_report_is_compliant(report: *const FjReport) -> c_int {
    match report.as_ref() {
        Some(r) => c_int::from(r.report.is_compliant()),
        None => -1,
    }
}

/// Number of disallowed monoid elements in the inferred effect.
///
/// # Safety
/// `report` must come from [`fj_check`] or be null.
#[no_mangle]
pub unsafe extern "C" fn fj_report_witness_count(report: *const FjReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.witnesses.len())
}

/// The JSON report; borrowed, valid while `report` lives.
///
/// # Safety
/// `report` must come from [`fj_check`] or be null.
#[no_mangle]
pub unsafe extern "C" fn fj_report_json(report: *const FjReport) -> *const c_char {
    report.as_ref().map_or(ptr::null(), |r| r.json.as_ptr())
}

/// A fresh copy of the human-readable report; free it with [`fj_string_free`].
///
/// # Safety
/// `report` must come from [`fj_check`] or be null.
#[no_mangle]
pub unsafe extern "C" fn fj_report_text(report: *const FjReport) -> *mut c_char {
    report.as_ref().map_or(ptr::null_mut(), |r| r.text.clone().into_raw())
}

/// Message of the last failure on this thread, or an empty string.
#[no_mangle]
pub extern "C" fn fj_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn fj_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn fj_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `p` must come from [`fj_parse_program`] or be null.
#[no_mangle]
pub unsafe extern "C" fn fj_program_free(p: *mut FjProgram) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` must come from [`fj_parse_policy`] or be null.
#[no_mangle]
pub unsafe extern "C" fn fj_policy_free(p: *mut FjPolicy) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `r` must come from [`fj_check`] or be null.
#[no_mangle]
pub unsafe extern "C" fn fj_report_free(r: *mut FjReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
