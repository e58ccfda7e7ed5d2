//! Readers for Trace refutations and DIMACS CNF.
//!
//! Trace is token oriented: a chain is `index literals... 0 antecedents... 0`
//! (or `index * antecedents... 0`), and line breaks carry no meaning beyond
//! separating tokens.

use std::collections::HashMap;
use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::formula::{Clause, Literal, Var};

pub type ChainIndex = u64;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ChainLiterals {
    Explicit(Clause),
    /// `*`: the literals are left for the checker to recover.
    Implicit,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chain {
    pub index: ChainIndex,
    pub literals: ChainLiterals,
    pub antecedents: Vec<ChainIndex>,
}

impl Chain {
    pub fn original(index: ChainIndex, clause: Clause) -> Self {
        Chain { index, literals: ChainLiterals::Explicit(clause), antecedents: Vec::new() }
    }

    pub fn derived(index: ChainIndex, clause: Clause, antecedents: Vec<ChainIndex>) -> Self {
        Chain { index, literals: ChainLiterals::Explicit(clause), antecedents }
    }

    pub fn is_original(&self) -> bool {
        self.antecedents.is_empty()
    }

    pub fn clause(&self) -> Option<&Clause> {
        match &self.literals {
            ChainLiterals::Explicit(c) => Some(c),
            ChainLiterals::Implicit => None,
        }
    }
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index)?;
        match &self.literals {
            ChainLiterals::Explicit(c) => {
                for lit in c {
                    write!(f, " {lit}")?;
                }
                write!(f, " 0")?;
            }
            ChainLiterals::Implicit => write!(f, " *")?,
        }
        for a in &self.antecedents {
            write!(f, " {a}")?;
        }
        write!(f, " 0")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TraceFile {
    pub chains: Vec<Chain>,
}

impl TraceFile {
    pub fn new(chains: Vec<Chain>) -> Self {
        TraceFile { chains }
    }

    pub fn originals(&self) -> impl Iterator<Item = &Chain> {
        self.chains.iter().filter(|c| c.is_original())
    }

    pub fn derived(&self) -> impl Iterator<Item = &Chain> {
        self.chains.iter().filter(|c| !c.is_original())
    }

    pub fn position_of(&self, index: ChainIndex) -> Option<usize> {
        self.chains.iter().position(|c| c.index == index)
    }

    pub fn get(&self, index: ChainIndex) -> Option<&Chain> {
        self.chains.iter().find(|c| c.index == index)
    }

    pub fn max_var(&self) -> Var {
        self.chains
            .iter()
            .filter_map(Chain::clause)
            .map(Clause::max_var)
            .max()
            .unwrap_or(0)
    }

    /// The original chains as a CNF problem, in trace order.
    pub fn to_cnf(&self) -> CnfProblem {
        let clauses: Vec<Clause> = self.originals().filter_map(|c| c.clause().cloned()).collect();
        let num_vars = clauses.iter().map(Clause::max_var).max().unwrap_or(0);
        CnfProblem { num_vars, clauses }
    }
}

impl fmt::Display for TraceFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for chain in &self.chains {
            writeln!(f, "{chain}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CnfProblem {
    pub num_vars: Var,
    pub clauses: Vec<Clause>,
}

impl CnfProblem {
    pub fn new(num_vars: Var, clauses: Vec<Clause>) -> Self {
        CnfProblem { num_vars, clauses }
    }
}

impl fmt::Display for CnfProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "p cnf {} {}", self.num_vars, self.clauses.len())?;
        for clause in &self.clauses {
            for lit in clause {
                write!(f, "{lit} ")?;
            }
            writeln!(f, "0")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("invalid token `{0}`")]
    InvalidToken(String),
    #[error("chain index must be a positive integer, found `{0}`")]
    BadIndex(String),
    #[error("antecedent must be a positive integer, found `{0}`")]
    BadAntecedent(String),
    #[error("chain {0} is missing its terminating zero")]
    MissingTerminator(ChainIndex),
    #[error("duplicate chain index {0}")]
    DuplicateIndex(ChainIndex),
    #[error("chain {0} uses `*` without antecedents")]
    ImplicitWithoutAntecedents(ChainIndex),
    #[error("`*` must directly follow the chain index")]
    MisplacedStar,
    #[error("malformed problem header `{0}`")]
    BadHeader(String),
    #[error("missing `p cnf` header")]
    MissingHeader,
    #[error("literal {lit} exceeds declared variable count {num_vars}")]
    VarOutOfRange { lit: i64, num_vars: Var },
    #[error("header declares {declared} clauses but {found} were read")]
    ClauseCountMismatch { declared: usize, found: usize },
    #[error("last clause is not terminated by zero")]
    UnterminatedClause,
}

fn tokens(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .flat_map(|(i, line)| line.split_ascii_whitespace().map(move |tok| (i + 1, tok)))
}

#[derive(Clone, Copy)]
enum TraceState {
    Index,
    Literals,
    Antecedents,
}

pub fn parse_trace(text: &str) -> Result<TraceFile, ParseError> {
    let mut chains = Vec::new();
    let mut seen = HashSet::new();
    let mut state = TraceState::Index;
    let mut start_line = 0;
    let mut index: ChainIndex = 0;
    let mut literals = Vec::new();
    let mut implicit = false;
    let mut antecedents = Vec::new();

    for (line, tok) in tokens(text) {
        let err = |kind| ParseError { line, kind };
        match state {
            TraceState::Index => {
                index = match tok.parse::<ChainIndex>() {
                    Ok(i) if i >= 1 => i,
                    _ => return Err(err(ParseErrorKind::BadIndex(tok.to_string()))),
                };
                if !seen.insert(index) {
                    return Err(err(ParseErrorKind::DuplicateIndex(index)));
                }
                start_line = line;
                literals.clear();
                antecedents.clear();
                implicit = false;
                state = TraceState::Literals;
            }
            TraceState::Literals => {
                if tok == "*" {
                    if !literals.is_empty() {
                        return Err(err(ParseErrorKind::MisplacedStar));
                    }
                    implicit = true;
                    state = TraceState::Antecedents;
                    continue;
                }
                let value: i64 = tok
                    .parse()
                    .map_err(|_| err(ParseErrorKind::InvalidToken(tok.to_string())))?;
                if value == 0 {
                    state = TraceState::Antecedents;
                } else {
                    let lit = Literal::from_dimacs(value)
                        .ok_or_else(|| err(ParseErrorKind::InvalidToken(tok.to_string())))?;
                    literals.push(lit);
                }
            }
            TraceState::Antecedents => {
                let value: i64 = tok
                    .parse()
                    .map_err(|_| err(ParseErrorKind::InvalidToken(tok.to_string())))?;
                if value == 0 {
                    if implicit && antecedents.is_empty() {
                        return Err(err(ParseErrorKind::ImplicitWithoutAntecedents(index)));
                    }
                    let lits = if implicit {
                        ChainLiterals::Implicit
                    } else {
                        ChainLiterals::Explicit(Clause::new(std::mem::take(&mut literals)))
                    };
                    chains.push(Chain {
                        index,
                        literals: lits,
                        antecedents: std::mem::take(&mut antecedents),
                    });
                    state = TraceState::Index;
                } else if value < 0 {
                    return Err(err(ParseErrorKind::BadAntecedent(tok.to_string())));
                } else {
                    antecedents.push(value as ChainIndex);
                }
            }
        }
    }
    match state {
        TraceState::Index => Ok(TraceFile { chains }),
        _ => Err(ParseError { line: start_line, kind: ParseErrorKind::MissingTerminator(index) }),
    }
}

pub fn parse_dimacs(text: &str) -> Result<CnfProblem, ParseError> {
    let mut header: Option<(Var, usize)> = None;
    let mut clauses = Vec::new();
    let mut current = Vec::new();
    let mut last_line = 0;

    'lines: for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        if trimmed.starts_with('p') {
            let fields: Vec<&str> = trimmed.split_ascii_whitespace().collect();
            let parsed = match fields.as_slice() {
                ["p", "cnf", v, c] => v.parse::<Var>().ok().zip(c.parse::<usize>().ok()),
                _ => None,
            };
            match parsed {
                Some(h) if header.is_none() => header = Some(h),
                _ => {
                    return Err(ParseError {
                        line,
                        kind: ParseErrorKind::BadHeader(trimmed.to_string()),
                    })
                }
            }
            continue;
        }
        // SATLIB benchmark files end with a `%` marker line.
        if trimmed.starts_with('%') {
            break 'lines;
        }
        let Some((num_vars, _)) = header else {
            return Err(ParseError { line, kind: ParseErrorKind::MissingHeader });
        };
        for tok in trimmed.split_ascii_whitespace() {
            let value: i64 = tok.parse().map_err(|_| ParseError {
                line,
                kind: ParseErrorKind::InvalidToken(tok.to_string()),
            })?;
            if value == 0 {
                clauses.push(Clause::new(std::mem::take(&mut current)));
                continue;
            }
            match Literal::from_dimacs(value) {
                Some(lit) if lit.var() <= num_vars => current.push(lit),
                _ => {
                    return Err(ParseError {
                        line,
                        kind: ParseErrorKind::VarOutOfRange { lit: value, num_vars },
                    })
                }
            }
        }
    }
    let Some((num_vars, declared)) = header else {
        return Err(ParseError { line: last_line.max(1), kind: ParseErrorKind::MissingHeader });
    };
    if !current.is_empty() {
        return Err(ParseError { line: last_line, kind: ParseErrorKind::UnterminatedClause });
    }
    if clauses.len() != declared {
        return Err(ParseError {
            line: last_line.max(1),
            kind: ParseErrorKind::ClauseCountMismatch { declared, found: clauses.len() },
        });
    }
    Ok(CnfProblem { num_vars, clauses })
}

/// Outcome of comparing a trace's original chains against a CNF file.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    /// Original chains with no matching CNF clause.
    pub unmatched_chains: Vec<ChainIndex>,
    /// Zero-based positions of CNF clauses with no matching original chain.
    pub unmatched_clauses: Vec<usize>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.unmatched_chains.is_empty() && self.unmatched_clauses.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return write!(f, "original chains match the CNF");
        }
        for idx in &self.unmatched_chains {
            writeln!(f, "original chain {idx} has no matching CNF clause")?;
        }
        for pos in &self.unmatched_clauses {
            writeln!(f, "CNF clause #{} has no matching original chain", pos + 1)?;
        }
        Ok(())
    }
}

/// Multiset comparison of original chains and CNF clauses, ignoring literal order.
pub fn validate_against_cnf(t: &TraceFile, p: &CnfProblem) -> ValidationReport {
    let mut pool: HashMap<Vec<Literal>, Vec<usize>> = HashMap::new();
    for (pos, clause) in p.clauses.iter().enumerate().rev() {
        pool.entry(clause.normalized()).or_default().push(pos);
    }
    let mut report = ValidationReport::default();
    for chain in t.originals() {
        let matched = chain
            .clause()
            .and_then(|c| pool.get_mut(&c.normalized()))
            .and_then(Vec::pop);
        if matched.is_none() {
            report.unmatched_chains.push(chain.index);
        }
    }
    report.unmatched_clauses = pool.into_values().flatten().collect();
    report.unmatched_clauses.sort_unstable();
    report
}
