//! Single-edit corruptions of a trace, and a semantic test for whether a
//! corrupted trace can still be a valid refutation.

use std::collections::{HashMap, HashSet};
use std::fmt;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formula::Clause;
use crate::oracle::{entails, truth_table_unsat, OracleError};
use crate::parse::{ChainIndex, TraceFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MutationKind {
    FlipLiteral,
    DropAntecedent,
    RenumberChain,
}

impl fmt::Display for MutationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MutationKind::FlipLiteral => "flip-literal",
            MutationKind::DropAntecedent => "drop-antecedent",
            MutationKind::RenumberChain => "renumber-chain",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Mutant {
    pub kind: MutationKind,
    /// The chain that was edited, by its original index.
    pub chain: ChainIndex,
    pub trace: TraceFile,
}

/// Negates literal `lit` of the chain at `pos`.
pub fn flip_literal(t: &TraceFile, pos: usize, lit: usize) -> Option<TraceFile> {
    let clause = t.chains.get(pos)?.clause()?;
    let mut lits = clause.literals().to_vec();
    let l = lits.get_mut(lit)?;
    *l = l.negated();
    let mut out = t.clone();
    out.chains[pos].literals = crate::parse::ChainLiterals::Explicit(Clause::new(lits));
    Some(out)
}

/// Removes antecedent `ant` of the derived chain at `pos`.
pub fn drop_antecedent(t: &TraceFile, pos: usize, ant: usize) -> Option<TraceFile> {
    let chain = t.chains.get(pos)?;
    if chain.is_original() || ant >= chain.antecedents.len() {
        return None;
    }
    let mut out = t.clone();
    out.chains[pos].antecedents.remove(ant);
    Some(out)
}

/// Gives the derived chain at `pos` an unused index without updating the
/// chains that reference it. `None` when nothing references it.
pub fn renumber_chain(t: &TraceFile, pos: usize) -> Option<TraceFile> {
    let chain = t.chains.get(pos)?;
    if chain.is_original() || !t.chains.iter().any(|c| c.antecedents.contains(&chain.index)) {
        return None;
    }
    let fresh = t.chains.iter().map(|c| c.index).max()? + 1;
    let mut out = t.clone();
    out.chains[pos].index = fresh;
    Some(out)
}

/// True when no sound checker could accept `t` as a refutation: its
/// original clauses are satisfiable, a reference is dangling, no empty
/// clause is derived, or some chain up to the first empty clause does not
/// follow from its earlier antecedents plus the positive unit clauses
/// available at that point.
pub fn must_fail(t: &TraceFile) -> Result<bool, OracleError> {
    if t.chains.iter().any(|c| c.clause().is_none()) {
        return Ok(false);
    }
    let originals: Vec<Clause> = t.originals().filter_map(|c| c.clause().cloned()).collect();
    if originals.iter().any(Clause::is_empty) {
        return Ok(false);
    }
    if !truth_table_unsat(&t.to_cnf())? {
        return Ok(true);
    }
    let all: HashSet<ChainIndex> = t.chains.iter().map(|c| c.index).collect();
    if t.chains.iter().any(|c| c.antecedents.iter().any(|a| !all.contains(a))) {
        return Ok(true);
    }

    let mut available: HashMap<ChainIndex, Clause> =
        t.originals().map(|c| (c.index, c.clause().unwrap().clone())).collect();
    let mut units: Vec<Clause> = originals.iter().filter(|c| is_positive_unit(c)).cloned().collect();
    for chain in t.derived() {
        let clause = chain.clause().unwrap();
        let mut premises: Vec<Clause> =
            chain.antecedents.iter().filter_map(|a| available.get(a).cloned()).collect();
        premises.extend(units.iter().cloned());
        if !entails(&premises, clause)? {
            return Ok(true);
        }
        if clause.is_empty() {
            return Ok(false);
        }
        if is_positive_unit(clause) {
            units.push(clause.clone());
        }
        available.insert(chain.index, clause.clone());
    }
    Ok(true)
}

fn is_positive_unit(c: &Clause) -> bool {
    matches!(c.literals(), [l] if l.is_positive())
}

/// Up to `per_kind` random mutants of each kind that [`must_fail`]
/// confirms, drawing at most `tries` candidates per kind.
pub fn mutants(t: &TraceFile, seed: u64, per_kind: usize, tries: usize) -> Result<Vec<Mutant>, OracleError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let derived: Vec<usize> = (0..t.chains.len()).filter(|&p| !t.chains[p].is_original()).collect();
    let mut out = Vec::new();
    if derived.is_empty() {
        return Ok(out);
    }
    for kind in [MutationKind::FlipLiteral, MutationKind::DropAntecedent, MutationKind::RenumberChain] {
        let mut found = 0;
        let mut seen = HashSet::new();
        for _ in 0..tries {
            if found == per_kind {
                break;
            }
            let (pos, candidate) = match kind {
                MutationKind::FlipLiteral => {
                    let pos = rng.random_range(0..t.chains.len());
                    let n = t.chains[pos].clause().map_or(0, Clause::len);
                    if n == 0 {
                        continue;
                    }
                    let lit = rng.random_range(0..n);
                    (pos, flip_literal(t, pos, lit).map(|m| (m, lit)))
                }
                MutationKind::DropAntecedent => {
                    let pos = derived[rng.random_range(0..derived.len())];
                    let n = t.chains[pos].antecedents.len();
                    let ant = rng.random_range(0..n);
                    (pos, drop_antecedent(t, pos, ant).map(|m| (m, ant)))
                }
                MutationKind::RenumberChain => {
                    let pos = derived[rng.random_range(0..derived.len())];
                    (pos, renumber_chain(t, pos).map(|m| (m, 0)))
                }
            };
            let Some((trace, detail)) = candidate else { continue };
            if !seen.insert((pos, detail)) || !must_fail(&trace)? {
                continue;
            }
            out.push(Mutant { kind, chain: t.chains[pos].index, trace });
            found += 1;
        }
    }
    Ok(out)
}
