#![allow(dead_code)]

use tracecert::fpc::{check_translated, CheckMode};
use tracecert::harness::corpus::{corpus, Instance};
use tracecert::harness::DEFAULT_SEED;
use tracecert::kernel::{CheckOptions, CheckReport};
use tracecert::oracle::{resolve_implicit, ChainStyle};
use tracecert::parse::{parse_trace, TraceFile};
use tracecert::translate::build_translated;

/// Why a trace never reached the kernel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormatError(pub String);

/// Text in, report out: parse, resolve `*` chains, translate, check.
pub fn pipeline(text: &str, mode: CheckMode) -> Result<CheckReport, FormatError> {
    let t = parse_trace(text).map_err(|e| FormatError(e.to_string()))?;
    check_trace(&t, mode)
}

pub fn check_trace(t: &TraceFile, mode: CheckMode) -> Result<CheckReport, FormatError> {
    let t = resolve_implicit(t).map_err(|e| FormatError(e.to_string()))?;
    let tp = build_translated(&t).map_err(|e| FormatError(e.to_string()))?;
    Ok(check_translated(&tp, mode, &CheckOptions::default()))
}

pub fn accepts(t: &TraceFile, mode: CheckMode) -> bool {
    check_trace(t, mode).is_ok_and(|r| r.accepted())
}

/// The shared random corpus: `count` instances over 4 to 12 variables.
pub fn standard_corpus(count: usize) -> Vec<Instance> {
    corpus(count, 4..=12, ChainStyle::Linear, DEFAULT_SEED)
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_tracecert")
}
