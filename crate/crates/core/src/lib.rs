//! Checks Trace-format UNSAT refutations by replaying them in a small
//! focused sequent calculus kernel steered by a proof certificate.

pub mod cli;
pub mod formula;
pub mod fpc;
pub mod harness;
pub mod kernel;
pub mod oracle;
pub mod parse;
pub mod samples;
pub mod translate;
