//! Command-line front end. Results go to stdout one per line; diagnostics go
//! to stderr.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::formula::Var;
use crate::fpc::{check_translated, CheckMode};
use crate::harness::{self, corpus, ExperimentConfig, HarnessError};
use crate::kernel::{CheckOptions, CheckReport, Verdict};
use crate::oracle::{resolve_implicit, ChainStyle};
use crate::parse::{parse_dimacs, parse_trace, validate_against_cnf, TraceFile};
use crate::translate::{build_translated, TranslatedProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Verified = 0,
    Rejected = 1,
    FormatError = 2,
    GuidanceOrBudget = 3,
}

impl From<ExitStatus> for ExitCode {
    fn from(s: ExitStatus) -> Self {
        ExitCode::from(s as u8)
    }
}

#[derive(Debug, Parser)]
#[command(name = "tracecert", version, about = "Check Trace-format UNSAT refutations with a focused sequent calculus kernel")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Style {
    Linear,
    Full,
}

impl From<Style> for ChainStyle {
    fn from(s: Style) -> Self {
        match s {
            Style::Linear => ChainStyle::Linear,
            Style::Full => ChainStyle::Full,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a trace, optionally against the CNF it claims to refute.
    Check {
        trace: PathBuf,
        cnf: Option<PathBuf>,
        /// Decide only on the head of each antecedent list.
        #[arg(long)]
        strict: bool,
        /// Stop after this many kernel nodes.
        #[arg(long)]
        budget: Option<u64>,
        /// Print the kernel counters.
        #[arg(long)]
        stats: bool,
    },
    /// Print the kernel's view of a trace.
    Translate { trace: PathBuf },
    /// Rewrite antecedent lists into an order the strict checker accepts.
    Reorder { trace: PathBuf, out: PathBuf },
    /// Run an antecedent-ordering experiment and write one CSV row per run.
    Experiment {
        trace: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        exp: u8,
        #[arg(long, default_value_t = harness::DEFAULT_BUDGET)]
        budget: u64,
        #[arg(long, default_value_t = harness::DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = harness::DEFAULT_SAMPLE_CAP)]
        sample_cap: usize,
        #[arg(long, default_value_t = harness::DEFAULT_COMBO_CAP)]
        combo_cap: u128,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Value of the trace_id column; the file stem when omitted.
        #[arg(long)]
        id: Option<String>,
    },
    /// Generate a random unsatisfiable CNF and a refutation of it.
    Gen {
        #[arg(long)]
        vars: Var,
        /// Clause count; about 5.5 per variable when omitted.
        #[arg(long)]
        clauses: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Writes PREFIX.cnf and PREFIX.trace.
        #[arg(long, default_value = "gen")]
        out: String,
        #[arg(long, value_enum, default_value_t = Style::Linear)]
        style: Style,
        /// Seeds to try before giving up.
        #[arg(long, default_value_t = 1000)]
        attempts: u64,
    },
}

/// A failure already mapped to its exit status.
struct Failure(ExitStatus, String);

type Outcome = Result<ExitStatus, Failure>;

fn format_error(e: impl std::fmt::Display) -> Failure {
    Failure(ExitStatus::FormatError, e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| format_error(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| format_error(format!("{}: {e}", path.display())))
}

fn load_trace(path: &Path) -> Result<TraceFile, Failure> {
    let text = read(path)?;
    let t = parse_trace(&text).map_err(|e| format_error(format!("{}: {e}", path.display())))?;
    resolve_implicit(&t).map_err(format_error)
}

fn load_translated(path: &Path) -> Result<(TraceFile, TranslatedProblem), Failure> {
    let t = load_trace(path)?;
    let tp = build_translated(&t).map_err(format_error)?;
    Ok((t, tp))
}

fn harness_failure(e: HarnessError) -> Failure {
    let status = match e {
        HarnessError::NotAccepted(_) => ExitStatus::Rejected,
        HarnessError::Translate(_) | HarnessError::Csv(_) => ExitStatus::FormatError,
        HarnessError::NoDerivedChains | HarnessError::PositionOutOfRange(_) | HarnessError::NotDerived(_) => {
            ExitStatus::FormatError
        }
        HarnessError::TooManyCombinations { .. } | HarnessError::ReorderFailed(_) => ExitStatus::GuidanceOrBudget,
    };
    Failure(status, e.to_string())
}

fn verdict_line(report: &CheckReport) -> (ExitStatus, String) {
    match &report.verdict {
        Verdict::Accepted => (ExitStatus::Verified, "VERIFIED".into()),
        Verdict::Rejected => (ExitStatus::Rejected, "REJECTED".into()),
        Verdict::BudgetExhausted => (ExitStatus::GuidanceOrBudget, "BUDGET EXCEEDED".into()),
        Verdict::GuidanceError(e) => (ExitStatus::GuidanceOrBudget, format!("GUIDANCE ERROR {e}")),
    }
}

fn check(
    out: &mut dyn Write,
    trace: &Path,
    cnf: Option<&Path>,
    strict: bool,
    budget: Option<u64>,
    stats: bool,
) -> Outcome {
    let (t, tp) = load_translated(trace)?;
    if let Some(cnf) = cnf {
        let text = read(cnf)?;
        let p = parse_dimacs(&text).map_err(|e| format_error(format!("{}: {e}", cnf.display())))?;
        let report = validate_against_cnf(&t, &p);
        if !report.is_valid() {
            return Err(format_error(format!("trace does not match {}: {report}", cnf.display())));
        }
    }
    let mode = if strict { CheckMode::Strict } else { CheckMode::Backtracking };
    let report = check_translated(&tp, mode, &CheckOptions { node_budget: budget, record_derivation: false });
    let (status, line) = verdict_line(&report);
    let mut text = format!("{line}\n");
    if stats {
        text += &format!(
            "mode {mode}\nnodes {}\nmax_depth {}\nbacktracks {}\nindexed_backtracks {}\n",
            report.nodes_visited, report.max_depth, report.backtracks, report.indexed_backtracks
        );
    }
    out.write_all(text.as_bytes()).map_err(format_error)?;
    Ok(status)
}

fn experiment(
    out: &mut dyn Write,
    err: &mut dyn Write,
    trace: &Path,
    exp: u8,
    config: ExperimentConfig,
    csv_path: Option<&Path>,
) -> Outcome {
    let t = load_trace(trace)?;
    let result = match exp {
        1 => harness::run_experiment1(&t, &config),
        2 => harness::run_experiment2(&t, &config),
        _ => harness::run_experiment3(&t, &config),
    }
    .map_err(harness_failure)?;
    let summary = format!("{}\n", result.summary);
    match csv_path {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| format_error(format!("{}: {e}", path.display())))?;
            harness::write_csv(&result.records, io::BufWriter::new(file)).map_err(harness_failure)?;
            out.write_all(summary.as_bytes()).map_err(format_error)?;
        }
        None => {
            harness::write_csv(&result.records, &mut *out).map_err(harness_failure)?;
            err.write_all(summary.as_bytes()).map_err(format_error)?;
        }
    }
    Ok(ExitStatus::Verified)
}

fn gen(out: &mut dyn Write, vars: Var, clauses: Option<usize>, seed: u64, prefix: &str, style: Style, attempts: u64) -> Outcome {
    let clauses = clauses.unwrap_or_else(|| corpus::default_clause_count(vars));
    let instance = corpus::generate_unsat(vars, clauses, style.into(), seed, attempts)
        .map_err(format_error)?
        .ok_or_else(|| {
            Failure(ExitStatus::GuidanceOrBudget, format!("no unsatisfiable instance in {attempts} seeds from {seed}"))
        })?;
    let cnf_path = format!("{prefix}.cnf");
    let trace_path = format!("{prefix}.trace");
    write_file(Path::new(&cnf_path), &instance.cnf.to_string())?;
    write_file(Path::new(&trace_path), &instance.trace.to_string())?;
    let text = format!("seed {}\ncnf {cnf_path}\ntrace {trace_path}\n", instance.seed);
    out.write_all(text.as_bytes()).map_err(format_error)?;
    Ok(ExitStatus::Verified)
}

/// Runs one command, writing results to `out` and diagnostics to `err`.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus {
    let outcome = match cli.command {
        Command::Check { trace, cnf, strict, budget, stats } => {
            check(out, &trace, cnf.as_deref(), strict, budget, stats)
        }
        Command::Translate { trace } => load_translated(&trace).and_then(|(_, tp)| {
            out.write_all(tp.to_string().as_bytes()).map_err(format_error)?;
            Ok(ExitStatus::Verified)
        }),
        Command::Reorder { trace, out: path } => load_trace(&trace).and_then(|t| {
            let r = harness::reorder_trace(&t).map_err(harness_failure)?;
            write_file(&path, &r.to_string())?;
            Ok(ExitStatus::Verified)
        }),
        Command::Experiment { trace, exp, budget, seed, sample_cap, combo_cap, out: csv, id } => {
            let trace_id = id.unwrap_or_else(|| {
                trace.file_stem().map_or_else(|| "trace".into(), |s| s.to_string_lossy().into_owned())
            });
            let config = ExperimentConfig { trace_id, budget, sample_cap, combo_cap, seed };
            experiment(out, err, &trace, exp, config, csv.as_deref())
        }
        Command::Gen { vars, clauses, seed, out: prefix, style, attempts } => {
            gen(out, vars, clauses, seed, &prefix, style, attempts)
        }
    };
    match outcome {
        Ok(status) => status,
        Err(Failure(status, message)) => {
            let _ = writeln!(err, "error: {message}");
            status
        }
    }
}

/// Parses the process arguments and runs on a thread with a large stack.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let worker = std::thread::Builder::new()
        .stack_size(256 << 20)
        .spawn(move || run(cli, &mut io::stdout().lock(), &mut io::stderr().lock()))
        .expect("spawn worker thread");
    worker.join().map_or(ExitCode::from(ExitStatus::GuidanceOrBudget), ExitCode::from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples::{SQUARE_CNF, SQUARE_TRACE};

    fn run_args(args: &[&str]) -> (ExitStatus, String, String) {
        let cli = Cli::try_parse_from(std::iter::once("tracecert").chain(args.iter().copied())).unwrap();
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let status = run(cli, &mut out, &mut err);
        (status, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn check_square() {
        let dir = tempfile::tempdir().unwrap();
        let trace = dir.path().join("square.trace");
        let cnf = dir.path().join("square.cnf");
        fs::write(&trace, SQUARE_TRACE).unwrap();
        fs::write(&cnf, SQUARE_CNF).unwrap();
        let (status, out, _) = run_args(&["check", trace.to_str().unwrap(), cnf.to_str().unwrap(), "--stats"]);
        assert_eq!(status, ExitStatus::Verified);
        assert!(out.starts_with("VERIFIED\nmode backtracking\nnodes "), "{out}");
    }

    #[test]
    fn exit_statuses() {
        let dir = tempfile::tempdir().unwrap();
        let garbage = dir.path().join("garbage.trace");
        fs::write(&garbage, "1 x 0").unwrap();
        assert_eq!(run_args(&["check", garbage.to_str().unwrap()]).0, ExitStatus::FormatError);
        let missing = dir.path().join("missing.trace");
        assert_eq!(run_args(&["check", missing.to_str().unwrap()]).0, ExitStatus::FormatError);

        let square = dir.path().join("square.trace");
        fs::write(&square, SQUARE_TRACE).unwrap();
        let (status, out, _) = run_args(&["check", square.to_str().unwrap(), "--budget", "3"]);
        assert_eq!((status, out.as_str()), (ExitStatus::GuidanceOrBudget, "BUDGET EXCEEDED\n"));
        assert_eq!(run_args(&["check", square.to_str().unwrap(), "--strict"]).0, ExitStatus::Rejected);

        let wrong_cnf = dir.path().join("wrong.cnf");
        fs::write(&wrong_cnf, "p cnf 2 1\n1 2 0\n").unwrap();
        let (status, _, err) = run_args(&["check", square.to_str().unwrap(), wrong_cnf.to_str().unwrap()]);
        assert_eq!(status, ExitStatus::FormatError);
        assert!(err.starts_with("error: trace does not match"), "{err}");
    }

    #[test]
    fn bad_experiment_number_is_a_usage_error() {
        assert!(Cli::try_parse_from(["tracecert", "experiment", "x.trace", "--exp", "4"]).is_err());
    }
}
