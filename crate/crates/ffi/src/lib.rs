//! C interface to the tracecert checker.
//!
//! Handles are opaque and owned by the caller until passed to the matching
//! `_free` function. Every call returns a [`TcStatus`]; on failure the
//! reason is available from [`tc_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tracecert::fpc::{check_translated, CheckMode};
use tracecert::harness::{reorder_trace, HarnessError};
use tracecert::kernel::{CheckOptions, Verdict};
use tracecert::oracle::resolve_implicit;
use tracecert::parse::{parse_dimacs, parse_trace, validate_against_cnf, CnfProblem, TraceFile};
use tracecert::translate::build_translated;

/// A parsed trace with every `*` chain resolved.
pub struct TcTrace(TraceFile);

/// A parsed DIMACS problem.
pub struct TcCnf(CnfProblem);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcStatus {
    Ok = 0,
    Rejected = 1,
    FormatError = 2,
    GuidanceOrBudget = 3,
    InvalidArgument = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcVerdict {
    Accepted = 0,
    Rejected = 1,
    BudgetExhausted = 2,
    GuidanceError = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TcReport {
    pub verdict: TcVerdict,
    pub nodes_visited: u64,
    pub max_depth: u64,
    pub backtracks: u64,
    pub indexed_backtracks: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn guarded(f: impl FnOnce() -> Result<TcStatus, (TcStatus, String)>) -> TcStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TcStatus::Panic
        }
    }
}

fn invalid(what: &str) -> (TcStatus, String) {
    (TcStatus::InvalidArgument, format!("{what} is null"))
}

unsafe fn text_arg<'a>(text: *const c_char) -> Result<&'a str, (TcStatus, String)> {
    if text.is_null() {
        return Err(invalid("text"));
    }
    CStr::from_ptr(text).to_str().map_err(|e| (TcStatus::FormatError, e.to_string()))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn tc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses a trace and resolves its `*` chains.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tc_trace_parse(text: *const c_char, out: *mut *mut TcTrace) -> TcStatus {
    guarded(|| {
        if out.is_null() {
            return Err(invalid("out"));
        }
        *out = ptr::null_mut();
        let t = parse_trace(text_arg(text)?).map_err(|e| (TcStatus::FormatError, e.to_string()))?;
        let t = resolve_implicit(&t).map_err(|e| (TcStatus::FormatError, e.to_string()))?;
        *out = Box::into_raw(Box::new(TcTrace(t)));
        Ok(TcStatus::Ok)
    })
}

/// # Safety
/// `trace` must come from this library and not have been freed; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn tc_trace_free(trace: *mut TcTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tc_cnf_parse(text: *const c_char, out: *mut *mut TcCnf) -> TcStatus {
    guarded(|| {
        if out.is_null() {
            return Err(invalid("out"));
        }
        *out = ptr::null_mut();
        let p = parse_dimacs(text_arg(text)?).map_err(|e| (TcStatus::FormatError, e.to_string()))?;
        *out = Box::into_raw(Box::new(TcCnf(p)));
        Ok(TcStatus::Ok)
    })
}

/// # Safety
/// `cnf` must come from this library and not have been freed; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn tc_cnf_free(cnf: *mut TcCnf) {
    if !cnf.is_null() {
        drop(Box::from_raw(cnf));
    }
}

/// `Ok` when the trace's original clauses are exactly the CNF's clauses.
///
/// # Safety
/// Both handles must be live.
#[no_mangle]
pub unsafe extern "C" fn tc_validate(trace: *const TcTrace, cnf: *const TcCnf) -> TcStatus {
    guarded(|| {
        let (Some(t), Some(p)) = (trace.as_ref(), cnf.as_ref()) else {
            return Err(invalid("handle"));
        };
        let report = validate_against_cnf(&t.0, &p.0);
        if report.is_valid() {
            Ok(TcStatus::Ok)
        } else {
            Err((TcStatus::FormatError, report.to_string()))
        }
    })
}

/// Checks a trace. `budget` of zero means unlimited. The report is filled
/// whenever the kernel ran, including on rejection.
///
/// # Safety
/// `trace` must be live and `report` writable.
#[no_mangle]
pub unsafe extern "C" fn tc_check(trace: *const TcTrace, strict: bool, budget: u64, report: *mut TcReport) -> TcStatus {
    guarded(|| {
        let Some(t) = trace.as_ref() else {
            return Err(invalid("trace"));
        };
        if report.is_null() {
            return Err(invalid("report"));
        }
        let tp = build_translated(&t.0).map_err(|e| (TcStatus::FormatError, e.to_string()))?;
        let mode = if strict { CheckMode::Strict } else { CheckMode::Backtracking };
        let options = CheckOptions { node_budget: (budget > 0).then_some(budget), record_derivation: false };
        let r = check_translated(&tp, mode, &options);
        let (verdict, status) = match &r.verdict {
            Verdict::Accepted => (TcVerdict::Accepted, TcStatus::Ok),
            Verdict::Rejected => (TcVerdict::Rejected, TcStatus::Rejected),
            Verdict::BudgetExhausted => (TcVerdict::BudgetExhausted, TcStatus::GuidanceOrBudget),
            Verdict::GuidanceError(e) => {
                set_error(e.to_string());
                (TcVerdict::GuidanceError, TcStatus::GuidanceOrBudget)
            }
        };
        *report = TcReport {
            verdict,
            nodes_visited: r.nodes_visited,
            max_depth: r.max_depth as u64,
            backtracks: r.backtracks,
            indexed_backtracks: r.indexed_backtracks,
        };
        Ok(status)
    })
}

/// Produces a copy of the trace whose antecedent lists the strict checker
/// accepts.
///
/// # Safety
/// `trace` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tc_reorder(trace: *const TcTrace, out: *mut *mut TcTrace) -> TcStatus {
    guarded(|| {
        let Some(t) = trace.as_ref() else {
            return Err(invalid("trace"));
        };
        if out.is_null() {
            return Err(invalid("out"));
        }
        *out = ptr::null_mut();
        let r = reorder_trace(&t.0).map_err(|e| {
            let status = match e {
                HarnessError::NotAccepted(_) => TcStatus::Rejected,
                HarnessError::ReorderFailed(_) => TcStatus::GuidanceOrBudget,
                _ => TcStatus::FormatError,
            };
            (status, e.to_string())
        })?;
        *out = Box::into_raw(Box::new(TcTrace(r)));
        Ok(TcStatus::Ok)
    })
}

/// The trace in Trace format, one chain per line. Free with
/// [`tc_string_free`]. Null on failure.
///
/// # Safety
/// `trace` must be live.
#[no_mangle]
pub unsafe extern "C" fn tc_trace_to_string(trace: *const TcTrace) -> *mut c_char {
    let mut result = ptr::null_mut();
    guarded(|| {
        let Some(t) = trace.as_ref() else {
            return Err(invalid("trace"));
        };
        result = CString::new(t.0.to_string()).map_err(|e| (TcStatus::FormatError, e.to_string()))?.into_raw();
        Ok(TcStatus::Ok)
    });
    result
}

/// # Safety
/// `s` must come from [`tc_trace_to_string`] and not have been freed; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn tc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
