//! Guidance for checking Trace refutations.
//!
//! The certificate is either the right-branch view (indices still to be
//! assigned to stored clauses, plus the lemmas left to cut on) or the
//! left-branch view (the antecedents a lemma may be derived from, plus a
//! one-shot permission to decide on an unindexed literal).

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::formula::PolarizedFormula;
use crate::kernel::{self, CheckOptions, CheckReport, Goal, Guidance, Slot, Storage};
use crate::parse::ChainIndex;
use crate::translate::{CutChain, TranslatedProblem};

/// A shared list consumed from the front without copying.
#[derive(Clone)]
pub struct Cursor<T> {
    items: Arc<[T]>,
    start: usize,
}

impl<T> Cursor<T> {
    pub fn new(items: Vec<T>) -> Self {
        Cursor { items: items.into(), start: 0 }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.items[self.start..]
    }

    pub fn head(&self) -> Option<&T> {
        self.as_slice().first()
    }

    /// Everything after the head; empty stays empty.
    pub fn tail(&self) -> Self {
        Cursor { items: self.items.clone(), start: (self.start + 1).min(self.items.len()) }
    }

    pub fn is_empty(&self) -> bool {
        self.as_slice().is_empty()
    }

    pub fn len(&self) -> usize {
        self.as_slice().len()
    }
}

impl<T: PartialEq> PartialEq for Cursor<T> {
    fn eq(&self, other: &Self) -> bool {
        self.as_slice() == other.as_slice()
    }
}

impl<T: Eq> Eq for Cursor<T> {}

impl<T: fmt::Debug> fmt::Debug for Cursor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Certificate {
    Right { pending: Cursor<ChainIndex>, chains: Cursor<CutChain> },
    Left { decide_list: Vec<ChainIndex>, flag: bool },
}

impl Certificate {
    pub fn right(pending: Vec<ChainIndex>, chains: Vec<CutChain>) -> Self {
        Certificate::Right { pending: Cursor::new(pending), chains: Cursor::new(chains) }
    }

    pub fn left(decide_list: Vec<ChainIndex>, flag: bool) -> Self {
        Certificate::Left { decide_list, flag }
    }

    pub fn initial(problem: &TranslatedProblem) -> Self {
        Certificate::right(problem.dex_list.clone(), problem.cut_chains.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CheckMode {
    /// Any remaining antecedent may be decided on.
    #[default]
    Backtracking,
    /// Only the head of the decide list may be decided on.
    Strict,
}

impl fmt::Display for CheckMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckMode::Backtracking => "backtracking",
            CheckMode::Strict => "strict",
        })
    }
}

impl FromStr for CheckMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "backtracking" => Ok(CheckMode::Backtracking),
            "strict" => Ok(CheckMode::Strict),
            other => Err(format!("unknown check mode `{other}`")),
        }
    }
}

pub fn cut_e(c: &Certificate) -> Option<(Certificate, Certificate, PolarizedFormula)> {
    let Certificate::Right { pending, chains } = c else {
        return None;
    };
    if !pending.is_empty() {
        return None;
    }
    let head = chains.head()?;
    Some((
        Certificate::left(head.decide_list.clone(), true),
        Certificate::Right { pending: Cursor::new(vec![head.index]), chains: chains.tail() },
        head.formula.clone(),
    ))
}

pub fn decide_e(c: &Certificate, mode: CheckMode) -> Vec<(Certificate, Slot)> {
    let Certificate::Left { decide_list, flag } = c else {
        return Vec::new();
    };
    let mut out = Vec::new();
    if *flag {
        out.push((Certificate::left(decide_list.clone(), false), Slot::Unindexed));
    }
    match mode {
        CheckMode::Backtracking => {
            for (pos, &index) in decide_list.iter().enumerate() {
                let mut rest = decide_list.clone();
                rest.remove(pos);
                out.push((Certificate::left(rest, true), Slot::Indexed(index)));
            }
        }
        CheckMode::Strict => {
            if let Some((&head, tail)) = decide_list.split_first() {
                out.push((Certificate::left(tail.to_vec(), *flag), Slot::Indexed(head)));
            }
        }
    }
    out
}

pub fn store_e(c: &Certificate) -> Option<(Certificate, Slot)> {
    match c {
        Certificate::Right { pending, chains } => {
            let &index = pending.head()?;
            Some((
                Certificate::Right { pending: pending.tail(), chains: chains.clone() },
                Slot::Indexed(index),
            ))
        }
        Certificate::Left { .. } => Some((c.clone(), Slot::Unindexed)),
    }
}

pub fn init_e(_c: &Certificate) -> bool {
    true
}

pub fn release_e(c: &Certificate) -> Option<Certificate> {
    matches!(c, Certificate::Left { .. }).then(|| c.clone())
}

pub fn and_e(c: &Certificate) -> Option<(Certificate, Certificate)> {
    matches!(c, Certificate::Left { .. }).then(|| (c.clone(), c.clone()))
}

pub fn or_e(c: &Certificate) -> Certificate {
    c.clone()
}

/// The Trace guidance for one check mode.
#[derive(Debug, Clone, Copy, Default)]
pub struct TraceFpc {
    pub mode: CheckMode,
}

impl TraceFpc {
    pub fn new(mode: CheckMode) -> Self {
        TraceFpc { mode }
    }
}

impl Guidance for TraceFpc {
    type Cert = Certificate;

    fn cut(&self, cert: &Certificate) -> Vec<(Certificate, Certificate, PolarizedFormula)> {
        cut_e(cert).into_iter().collect()
    }

    fn decide(&self, cert: &Certificate) -> Vec<(Certificate, Slot)> {
        decide_e(cert, self.mode)
    }

    fn store(&self, cert: &Certificate, _formula: &PolarizedFormula) -> Vec<(Certificate, Slot)> {
        store_e(cert).into_iter().collect()
    }

    fn init(&self, cert: &Certificate) -> bool {
        init_e(cert)
    }

    fn release(&self, cert: &Certificate) -> Vec<Certificate> {
        release_e(cert).into_iter().collect()
    }

    fn and(&self, cert: &Certificate) -> Vec<(Certificate, Certificate)> {
        and_e(cert).into_iter().collect()
    }

    fn or(&self, cert: &Certificate) -> Vec<Certificate> {
        vec![or_e(cert)]
    }
}

/// Checks a whole translated trace from the empty context.
pub fn check_translated(problem: &TranslatedProblem, mode: CheckMode, options: &CheckOptions) -> CheckReport {
    kernel::check(
        Certificate::initial(problem),
        Storage::new(),
        Goal::Unfocused(vec![problem.root.clone()]),
        &TraceFpc::new(mode),
        options,
    )
}

/// The context the checker has built when it reaches the cut on
/// `problem.cut_chains[position]`: every original clause and every earlier
/// lemma, stored the way the right branch stores them.
pub fn context_before_chain(problem: &TranslatedProblem, position: usize) -> Storage {
    let mut storage = Storage::new();
    let mut root = Some(&problem.root);
    let mut disjuncts = Vec::new();
    while let Some(f) = root {
        match f {
            PolarizedFormula::OrNeg(a, b) => {
                disjuncts.push(&**a);
                root = Some(&**b);
            }
            other => {
                disjuncts.push(other);
                root = None;
            }
        }
    }
    let lemmas = problem.cut_chains[..position]
        .iter()
        .map(|c| (c.index, c.formula.negate()));
    let originals = problem.dex_list.iter().copied().zip(disjuncts.into_iter().cloned());
    for (index, f) in originals.chain(lemmas) {
        match f {
            PolarizedFormula::NegAtom(v) => storage.store_negative(v),
            PolarizedFormula::True => {}
            positive => storage
                .store_positive(Slot::Indexed(index), positive)
                .expect("chain indices are unique and stored formulas positive"),
        }
    }
    storage
}

/// Checks only the left branch for one lemma, with a chosen decide list.
pub fn check_chain(
    problem: &TranslatedProblem,
    position: usize,
    decide_list: Vec<ChainIndex>,
    mode: CheckMode,
    options: &CheckOptions,
) -> CheckReport {
    let chain = &problem.cut_chains[position];
    kernel::check(
        Certificate::left(decide_list, true),
        context_before_chain(problem, position),
        Goal::Unfocused(vec![chain.formula.clone()]),
        &TraceFpc::new(mode),
        options,
    )
}
