use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use tracecert::samples::{SQUARE_CNF, SQUARE_TRACE};
use tracecert_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(tc_last_error_message()) }.to_str().unwrap().to_owned()
}

fn parse(text: &str) -> (TcStatus, *mut TcTrace) {
    let mut t = ptr::null_mut();
    let status = unsafe { tc_trace_parse(c(text).as_ptr(), &mut t) };
    (status, t)
}

fn check(t: *const TcTrace, strict: bool, budget: u64) -> (TcStatus, TcReport) {
    let mut report = TcReport { verdict: TcVerdict::Rejected, nodes_visited: 0, max_depth: 0, backtracks: 0, indexed_backtracks: 0 };
    let status = unsafe { tc_check(t, strict, budget, &mut report) };
    (status, report)
}

#[test]
fn parse_check_and_free() {
    let (status, t) = parse(SQUARE_TRACE);
    assert_eq!(status, TcStatus::Ok);
    assert!(!t.is_null());
    let (status, report) = check(t, false, 0);
    assert_eq!(status, TcStatus::Ok);
    assert_eq!(report.verdict, TcVerdict::Accepted);
    assert!(report.nodes_visited > 0);
    assert_eq!(last_error(), "");

    let (status, report) = check(t, true, 0);
    assert_eq!(status, TcStatus::Rejected);
    assert_eq!(report.verdict, TcVerdict::Rejected);

    let (status, report) = check(t, false, 2);
    assert_eq!(status, TcStatus::GuidanceOrBudget);
    assert_eq!(report.verdict, TcVerdict::BudgetExhausted);
    unsafe { tc_trace_free(t) };
}

#[test]
fn format_errors_set_the_message() {
    let (status, t) = parse("1 1 2 0 x\n");
    assert_eq!(status, TcStatus::FormatError);
    assert!(t.is_null());
    assert!(!last_error().is_empty());

    let mut t = ptr::null_mut();
    assert_eq!(unsafe { tc_trace_parse(ptr::null(), &mut t) }, TcStatus::InvalidArgument);
    assert_eq!(unsafe { tc_trace_parse(c(SQUARE_TRACE).as_ptr(), ptr::null_mut()) }, TcStatus::InvalidArgument);
    assert_eq!(check(ptr::null(), false, 0).0, TcStatus::InvalidArgument);
    unsafe {
        tc_trace_free(ptr::null_mut());
        tc_cnf_free(ptr::null_mut());
        tc_string_free(ptr::null_mut());
    }
}

#[test]
fn validate_against_cnf() {
    let (_, t) = parse(SQUARE_TRACE);
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { tc_cnf_parse(c(SQUARE_CNF).as_ptr(), &mut p) }, TcStatus::Ok);
    assert_eq!(unsafe { tc_validate(t, p) }, TcStatus::Ok);
    let mut q = ptr::null_mut();
    assert_eq!(unsafe { tc_cnf_parse(c("p cnf 2 1\n1 2 0\n").as_ptr(), &mut q) }, TcStatus::Ok);
    assert_eq!(unsafe { tc_validate(t, q) }, TcStatus::FormatError);
    assert!(!last_error().is_empty());
    unsafe {
        tc_cnf_free(p);
        tc_cnf_free(q);
        tc_trace_free(t);
    }
}

#[test]
fn reorder_round_trips_through_text() {
    let (_, t) = parse(SQUARE_TRACE);
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { tc_reorder(t, &mut r) }, TcStatus::Ok);
    let (status, report) = check(r, true, 0);
    assert_eq!(status, TcStatus::Ok);
    assert_eq!(report.indexed_backtracks, 0);

    let s = unsafe { tc_trace_to_string(r) };
    assert!(!s.is_null());
    let text = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { tc_string_free(s) };
    let (status, again) = parse(&text);
    assert_eq!(status, TcStatus::Ok);
    assert_eq!(check(again, true, 0).0, TcStatus::Ok);
    unsafe {
        tc_trace_free(again);
        tc_trace_free(r);
        tc_trace_free(t);
    }
}

#[test]
fn reorder_refuses_a_rejected_trace() {
    let (_, t) = parse(&SQUARE_TRACE.replace("6 0 4 2 5 0", "6 2 0 4 2 5 0"));
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { tc_reorder(t, &mut r) }, TcStatus::Rejected);
    assert!(r.is_null());
    unsafe { tc_trace_free(t) };
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/tracecert.h")
}

#[test]
fn header_declares_the_interface() {
    let h = std::fs::read_to_string(header()).unwrap();
    for name in [
        "tc_trace_parse",
        "tc_trace_free",
        "tc_cnf_parse",
        "tc_cnf_free",
        "tc_validate",
        "tc_check",
        "tc_reorder",
        "tc_trace_to_string",
        "tc_string_free",
        "tc_last_error_message",
        "typedef struct TcTrace TcTrace",
        "TC_STATUS_GUIDANCE_OR_BUDGET = 3",
        "TC_VERDICT_ACCEPTED = 0",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "tracecert.h"

int main(void) {
    const char *text = "1 1 2 0 0\n2 -1 2 0 0\n3 1 -2 0 0\n4 -1 -2 0 0\n5 1 0 3 1 0\n6 0 4 2 5 0\n";
    TcTrace *t = NULL;
    if (tc_trace_parse(text, &t) != TC_STATUS_OK) return 10;
    TcReport r;
    if (tc_check(t, false, 0, &r) != TC_STATUS_OK || r.verdict != TC_VERDICT_ACCEPTED) return 11;
    if (tc_check(t, true, 0, &r) != TC_STATUS_REJECTED) return 12;
    TcTrace *o = NULL;
    if (tc_reorder(t, &o) != TC_STATUS_OK) return 13;
    if (tc_check(o, true, 0, &r) != TC_STATUS_OK || r.indexed_backtracks != 0) return 14;
    TcTrace *bad = NULL;
    if (tc_trace_parse("1 1 x\n", &bad) != TC_STATUS_FORMAT_ERROR || strlen(tc_last_error_message()) == 0) return 15;
    printf("nodes %llu\n", (unsigned long long)r.nodes_visited);
    tc_trace_free(o);
    tc_trace_free(t);
    return 0;
}
"#;

/// Compiles a C client against the header and the static library when a C
/// compiler is on the path.
#[test]
fn c_client_links_and_runs() {
    let Some(cc) = ["cc", "gcc", "clang"].into_iter().find(|cc| Command::new(cc).arg("--version").output().is_ok()) else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    // target/<profile>/deps/<test binary>
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libtracecert_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    let exe = dir.path().join("client");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let built = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(built.status.success(), "{}", String::from_utf8_lossy(&built.stderr));
    let ran = Command::new(&exe).output().unwrap();
    assert!(ran.status.success(), "client exited with {:?}", ran.status.code());
    assert!(String::from_utf8_lossy(&ran.stdout).starts_with("nodes "));
}
