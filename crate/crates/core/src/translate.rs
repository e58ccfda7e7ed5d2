//! Turns a parsed trace into the kernel's starting sequent: the negated CNF
//! as one negative disjunction, the indices to store its disjuncts under,
//! and the ordered lemmas to cut on.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::formula::{clause_to_conjunction, clause_to_disjunction, PolarizedFormula};
use crate::parse::{ChainIndex, TraceFile};

/// One derived chain as the checker consumes it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CutChain {
    pub index: ChainIndex,
    pub decide_list: Vec<ChainIndex>,
    pub formula: PolarizedFormula,
}

impl fmt::Display for CutChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "chain({},[", self.index)?;
        for (i, d) in self.decide_list.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, "],{})", self.formula)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslatedProblem {
    pub root: PolarizedFormula,
    /// `dex_list[i]` is the chain index the i-th disjunct of `root` is stored under.
    pub dex_list: Vec<ChainIndex>,
    pub cut_chains: Vec<CutChain>,
    /// Derived chains listed after the first empty-clause chain; never reached.
    pub unreachable: Vec<ChainIndex>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("trace has no original clauses")]
    NoOriginalClauses,
    #[error("chain {0} still has implicit literals")]
    ImplicitLiterals(ChainIndex),
    #[error("chain {chain} references antecedent {antecedent}, which is not in the trace")]
    DanglingAntecedent { chain: ChainIndex, antecedent: ChainIndex },
}

pub fn build_translated(t: &TraceFile) -> Result<TranslatedProblem, TranslateError> {
    let known: HashSet<ChainIndex> = t.chains.iter().map(|c| c.index).collect();
    let mut disjuncts = Vec::new();
    let mut dex_list = Vec::new();
    let mut cut_chains = Vec::new();
    let mut unreachable = Vec::new();
    let mut refuted = false;

    for chain in &t.chains {
        let clause = chain.clause().ok_or(TranslateError::ImplicitLiterals(chain.index))?;
        if chain.is_original() {
            // The negation of the empty clause is `true`.
            disjuncts.push(clause_to_conjunction(clause).unwrap_or(PolarizedFormula::True));
            dex_list.push(chain.index);
            continue;
        }
        if let Some(&missing) = chain.antecedents.iter().find(|a| !known.contains(a)) {
            return Err(TranslateError::DanglingAntecedent { chain: chain.index, antecedent: missing });
        }
        if refuted {
            unreachable.push(chain.index);
        }
        refuted |= clause.is_empty();
        cut_chains.push(CutChain {
            index: chain.index,
            decide_list: chain.antecedents.clone(),
            formula: clause_to_disjunction(clause),
        });
    }

    let mut root = disjuncts.pop().ok_or(TranslateError::NoOriginalClauses)?;
    while let Some(d) = disjuncts.pop() {
        root = PolarizedFormula::or(d, root);
    }
    Ok(TranslatedProblem { root, dex_list, cut_chains, unreachable })
}

impl fmt::Display for TranslatedProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "root {}", self.root)?;
        write!(f, "dex")?;
        for d in &self.dex_list {
            write!(f, " {d}")?;
        }
        writeln!(f)?;
        for chain in &self.cut_chains {
            writeln!(f, "cut {chain}")?;
        }
        for idx in &self.unreachable {
            writeln!(f, "unreachable {idx}")?;
        }
        Ok(())
    }
}
