//! Brute-force reference procedures that share no code with the kernel.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::formula::{Clause, Literal, Var};
use crate::parse::{Chain, ChainIndex, ChainLiterals, CnfProblem, TraceFile};

pub const TRUTH_TABLE_VAR_LIMIT: Var = 20;
pub const GENERATOR_VAR_LIMIT: Var = 16;
const RESOLUTION_SEARCH_LIMIT: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{vars} variables exceed the limit of {limit}")]
    TooManyVars { vars: Var, limit: Var },
    #[error("chain {chain} references antecedent {antecedent}, which is not available")]
    MissingAntecedent { chain: ChainIndex, antecedent: ChainIndex },
    #[error("chain {0}: no ordering of its antecedents is a linear input resolution derivation of its clause")]
    NoDerivation(ChainIndex),
    #[error("chain {chain} has {count} antecedents, too many to search")]
    TooManyAntecedents { chain: ChainIndex, count: usize },
    #[error("chain {0} has no antecedents")]
    NoAntecedents(ChainIndex),
}

/// Total assignment; `values[v]` is the value of variable `v`, index 0 unused.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub values: Vec<bool>,
}

impl Assignment {
    pub fn value(&self, var: Var) -> bool {
        self.values[var as usize]
    }

    pub fn satisfies(&self, c: &Clause) -> bool {
        c.iter().any(|l| self.value(l.var()) == l.is_positive())
    }
}

struct Masks {
    pos: u32,
    neg: u32,
}

fn masks(c: &Clause) -> Masks {
    let mut m = Masks { pos: 0, neg: 0 };
    for l in c {
        let bit = 1u32 << (l.var() - 1);
        if l.is_positive() {
            m.pos |= bit;
        } else {
            m.neg |= bit;
        }
    }
    m
}

fn holds(m: &Masks, bits: u32) -> bool {
    bits & m.pos != 0 || !bits & m.neg != 0
}

fn var_count(num_vars: Var, clauses: &[&Clause]) -> Result<Var, OracleError> {
    let vars = clauses.iter().map(|c| c.max_var()).max().unwrap_or(0).max(num_vars);
    if vars > TRUTH_TABLE_VAR_LIMIT {
        return Err(OracleError::TooManyVars { vars, limit: TRUTH_TABLE_VAR_LIMIT });
    }
    Ok(vars)
}

/// The first satisfying assignment in binary counting order.
pub fn find_model(p: &CnfProblem) -> Result<Option<Assignment>, OracleError> {
    let clauses: Vec<&Clause> = p.clauses.iter().collect();
    let vars = var_count(p.num_vars, &clauses)?;
    let ms: Vec<Masks> = clauses.iter().map(|c| masks(c)).collect();
    let model = (0..1u32 << vars).find(|&bits| ms.iter().all(|m| holds(m, bits)));
    Ok(model.map(|bits| Assignment {
        values: (0..=vars).map(|v| v > 0 && bits >> (v - 1) & 1 == 1).collect(),
    }))
}

pub fn truth_table_unsat(p: &CnfProblem) -> Result<bool, OracleError> {
    Ok(find_model(p)?.is_none())
}

/// Whether every assignment satisfying all `premises` satisfies `goal`.
pub fn entails(premises: &[Clause], goal: &Clause) -> Result<bool, OracleError> {
    let all: Vec<&Clause> = premises.iter().chain(std::iter::once(goal)).collect();
    let vars = var_count(0, &all)?;
    let ps: Vec<Masks> = premises.iter().map(masks).collect();
    let g = masks(goal);
    Ok((0..1u32 << vars).all(|bits| holds(&g, bits) || !ps.iter().all(|m| holds(m, bits))))
}

type LitSet = Vec<Literal>;

fn as_set(c: &Clause) -> LitSet {
    c.normalized()
}

/// Resolves two literal sets that clash on exactly one variable.
fn resolve(a: &[Literal], b: &[Literal]) -> Option<LitSet> {
    let mut pivot = None;
    for l in a {
        if b.contains(&l.negated()) {
            if pivot.is_some() {
                return None;
            }
            pivot = Some(l.var());
        }
    }
    let pivot = pivot?;
    let mut out: LitSet = a.iter().chain(b).copied().filter(|l| l.var() != pivot).collect();
    out.sort_unstable();
    out.dedup();
    Some(out)
}

struct ResolutionSearch<'a> {
    clauses: Vec<LitSet>,
    target: Option<&'a [Literal]>,
    failed: HashSet<(u64, LitSet)>,
}

impl ResolutionSearch<'_> {
    fn run(&mut self, used: u64, current: LitSet) -> Option<LitSet> {
        if used.count_ones() as usize == self.clauses.len() {
            return match self.target {
                Some(t) if t != current.as_slice() => None,
                _ => Some(current),
            };
        }
        if self.failed.contains(&(used, current.clone())) {
            return None;
        }
        for i in 0..self.clauses.len() {
            if used >> i & 1 == 1 {
                continue;
            }
            if let Some(next) = resolve(&current, &self.clauses[i]) {
                if let Some(found) = self.run(used | 1 << i, next) {
                    return Some(found);
                }
            }
        }
        self.failed.insert((used, current));
        None
    }
}

/// Finds a linear input resolution derivation that uses every antecedent of
/// `ch` once and returns its resolvent. With explicit literals, the
/// resolvent must equal them as a set.
pub fn verify_chain_resolution(
    ch: &Chain,
    context: &HashMap<ChainIndex, Clause>,
) -> Result<Clause, OracleError> {
    let clauses = ch
        .antecedents
        .iter()
        .map(|a| {
            context
                .get(a)
                .map(as_set)
                .ok_or(OracleError::MissingAntecedent { chain: ch.index, antecedent: *a })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let target = ch.clause().map(as_set);
    let matches = |r: &LitSet| target.as_ref().is_none_or(|t| t == r);

    // The listed order is the common case and costs one pass.
    let (first, rest) = clauses.split_first().ok_or(OracleError::NoAntecedents(ch.index))?;
    let mut current = Some(first.clone());
    for c in rest {
        current = current.and_then(|r| resolve(&r, c));
    }
    if let Some(r) = current.filter(matches) {
        return Ok(Clause::new(r));
    }

    if clauses.len() > RESOLUTION_SEARCH_LIMIT {
        return Err(OracleError::TooManyAntecedents { chain: ch.index, count: clauses.len() });
    }
    let mut search = ResolutionSearch { clauses, target: target.as_deref(), failed: HashSet::new() };
    for start in 0..search.clauses.len() {
        let first = search.clauses[start].clone();
        if let Some(r) = search.run(1 << start, first) {
            return Ok(Clause::new(r));
        }
    }
    Err(OracleError::NoDerivation(ch.index))
}

/// Replaces every `*` chain with its recovered resolvent. Chains are
/// resolved as soon as all their antecedents are known, so forward
/// references are allowed.
pub fn resolve_implicit(t: &TraceFile) -> Result<TraceFile, OracleError> {
    let mut known: HashMap<ChainIndex, Clause> = t
        .chains
        .iter()
        .filter_map(|c| c.clause().map(|cl| (c.index, cl.clone())))
        .collect();
    let mut pending: Vec<usize> = (0..t.chains.len())
        .filter(|&i| t.chains[i].literals == ChainLiterals::Implicit)
        .collect();
    while !pending.is_empty() {
        let before = pending.len();
        let mut blocked = Vec::new();
        for pos in pending {
            let ch = &t.chains[pos];
            if ch.antecedents.iter().all(|a| known.contains_key(a)) {
                let clause = verify_chain_resolution(ch, &known)?;
                known.insert(ch.index, clause);
            } else {
                blocked.push(pos);
            }
        }
        if blocked.len() == before {
            let ch = &t.chains[blocked[0]];
            let antecedent = *ch.antecedents.iter().find(|a| !known.contains_key(a)).expect("blocked");
            return Err(OracleError::MissingAntecedent { chain: ch.index, antecedent });
        }
        pending = blocked;
    }
    let chains = t
        .chains
        .iter()
        .map(|c| match c.literals {
            ChainLiterals::Implicit => {
                Chain::derived(c.index, known[&c.index].clone(), c.antecedents.clone())
            }
            ChainLiterals::Explicit(_) => c.clone(),
        })
        .collect();
    Ok(TraceFile::new(chains))
}

/// An order in which the antecedents can be decided on one at a time, each
/// only after the one before it, to derive `target`. `units` are variables
/// asserted true by positive unit clauses already in the context; such unit
/// clauses cannot themselves be decided on and are listed last.
///
/// Each antecedent must have every negative literal already known true and at
/// most one positive literal whose variable is not false in `target`; that
/// literal becomes known true. The search is greedy, which is enough because
/// known facts only grow.
pub fn linear_order(target: &Clause, antecedents: &[Clause], units: &HashSet<Var>) -> Option<Vec<usize>> {
    let mut known_true: HashSet<Var> = units.clone();
    let mut known_false: HashSet<Var> = HashSet::new();
    for l in target {
        if l.is_positive() {
            known_false.insert(l.var());
        } else {
            known_true.insert(l.var());
        }
    }
    let decidable = |c: &Clause| !(c.is_empty() || c.len() == 1 && c.literals()[0].is_positive());
    let mut used = vec![false; antecedents.len()];
    let mut order = Vec::new();
    loop {
        let step = antecedents.iter().enumerate().find_map(|(i, d)| {
            if used[i] || !decidable(d) || d.iter().any(|l| !l.is_positive() && !known_true.contains(&l.var())) {
                return None;
            }
            let open: Vec<Var> =
                d.iter().filter(|l| l.is_positive() && !known_false.contains(&l.var())).map(|l| l.var()).collect();
            (open.len() <= 1).then(|| (i, open.first().copied()))
        });
        let (i, learned) = step?;
        used[i] = true;
        order.push(i);
        match learned {
            Some(v) => {
                known_true.insert(v);
            }
            None => break,
        }
    }
    order.extend((0..antecedents.len()).filter(|&i| !used[i]));
    Some(order)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Generated {
    Refutation(TraceFile),
    Satisfiable,
}

/// How the generator cuts a conflict's resolution sequence into chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ChainStyle {
    /// Split into the longest pieces that can each be checked with the
    /// antecedents in a single fixed order.
    #[default]
    Linear,
    /// One chain per conflict, as a solver's trace would record it.
    Full,
}

struct Generator {
    style: ChainStyle,
    originals: Vec<Clause>,
    clauses: HashMap<ChainIndex, Clause>,
    derived: Vec<Chain>,
    next_index: ChainIndex,
    units: HashSet<Var>,
    values: Vec<Option<bool>>,
    /// Assigned literals with the original clause index that forced them, or
    /// `None` for decisions.
    trail: Vec<(Literal, Option<ChainIndex>)>,
}

enum Propagation {
    Conflict(ChainIndex),
    Fixpoint,
}

impl Generator {
    fn value(&self, l: Literal) -> Option<bool> {
        self.values[l.var() as usize].map(|v| v == l.is_positive())
    }

    fn assign(&mut self, l: Literal, reason: Option<ChainIndex>) {
        self.values[l.var() as usize] = Some(l.is_positive());
        self.trail.push((l, reason));
    }

    fn undo_to(&mut self, len: usize) {
        for (l, _) in self.trail.drain(len..) {
            self.values[l.var() as usize] = None;
        }
    }

    fn propagate(&mut self) -> Propagation {
        loop {
            let mut changed = false;
            for i in 0..self.originals.len() {
                let mut unassigned = None;
                let mut free = 0;
                let mut satisfied = false;
                for &l in self.originals[i].literals() {
                    match self.value(l) {
                        Some(true) => satisfied = true,
                        Some(false) => {}
                        None => {
                            free += 1;
                            unassigned = Some(l);
                        }
                    }
                }
                if satisfied {
                    continue;
                }
                let index = i as ChainIndex + 1;
                match (free, unassigned) {
                    (0, _) => return Propagation::Conflict(index),
                    (1, Some(l)) => {
                        self.assign(l, Some(index));
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                return Propagation::Fixpoint;
            }
        }
    }

    fn emit(&mut self, clause: Clause, antecedents: Vec<ChainIndex>) -> ChainIndex {
        let index = self.next_index;
        self.next_index += 1;
        if let [l] = clause.literals() {
            if l.is_positive() {
                self.units.insert(l.var());
            }
        }
        self.clauses.insert(index, clause.clone());
        self.derived.push(Chain::derived(index, clause, antecedents));
        index
    }

    /// Derives a clause falsified by the current decisions from the conflict,
    /// splitting the resolution sequence into chains that each admit a
    /// linear order.
    fn analyze(&mut self, conflict: ChainIndex) -> (ChainIndex, LitSet) {
        let mut steps: Vec<(ChainIndex, LitSet)> = Vec::new();
        let mut resolvent = as_set(&self.clauses[&conflict]);
        for &(l, reason) in self.trail.iter().rev() {
            let Some(reason) = reason else { continue };
            if resolvent.contains(&l.negated()) {
                resolvent = resolve(&resolvent, &as_set(&self.clauses[&reason])).expect("reason clashes once");
                steps.push((reason, resolvent.clone()));
            }
        }

        let mut current = (conflict, as_set(&self.clauses[&conflict]));
        let mut start = 0;
        while start < steps.len() {
            let end = match self.style {
                ChainStyle::Full => steps.len(),
                ChainStyle::Linear => (start + 2..=steps.len())
                    .rev()
                    .find(|&candidate| {
                        let mut ants = vec![Clause::new(current.1.clone())];
                        ants.extend(steps[start..candidate].iter().map(|(r, _)| self.clauses[r].clone()));
                        let target = Clause::new(steps[candidate - 1].1.clone());
                        linear_order(&target, &ants, &self.units).is_some()
                    })
                    .unwrap_or(start + 1),
            };
            let mut ants = vec![current.0];
            ants.extend(steps[start..end].iter().map(|(r, _)| *r));
            let clause = steps[end - 1].1.clone();
            let index = self.emit(Clause::new(clause.clone()), ants);
            current = (index, clause);
            start = end;
        }
        current
    }

    fn refute(&mut self) -> Option<(ChainIndex, LitSet)> {
        let mark = self.trail.len();
        if let Propagation::Conflict(k) = self.propagate() {
            let out = self.analyze(k);
            self.undo_to(mark);
            return Some(out);
        }
        let Some(var) = (1..self.values.len()).find(|&v| self.values[v].is_none()) else {
            self.undo_to(mark);
            return None;
        };
        let var = var as Var;
        let mut sides = Vec::new();
        for positive in [true, false] {
            let lit = Literal::new(var, positive);
            let inner = self.trail.len();
            self.assign(lit, None);
            let side = self.refute();
            self.undo_to(inner);
            let side = match side {
                Some(s) => s,
                None => {
                    self.undo_to(mark);
                    return None;
                }
            };
            if !side.1.contains(&lit.negated()) {
                self.undo_to(mark);
                return Some(side);
            }
            sides.push(side);
        }
        self.undo_to(mark);
        let (a, b) = (&sides[0], &sides[1]);
        let clause = resolve(&a.1, &b.1).expect("branches clash on the decision");
        let index = self.emit(Clause::new(clause.clone()), vec![a.0, b.0]);
        Some((index, clause))
    }
}

/// Builds a refutation of `p` by a small DPLL search: each conflict is
/// turned into a clause over the negated decisions by resolving with the
/// clauses that forced each assignment, and the two sides of every decision
/// are resolved together. Chains are globally ordered and end in the empty
/// clause.
pub fn generate_trace(p: &CnfProblem) -> Result<Generated, OracleError> {
    generate_trace_with(p, ChainStyle::Linear)
}

pub fn generate_trace_with(p: &CnfProblem, style: ChainStyle) -> Result<Generated, OracleError> {
    let vars = p.clauses.iter().map(Clause::max_var).max().unwrap_or(0).max(p.num_vars);
    if vars > GENERATOR_VAR_LIMIT {
        return Err(OracleError::TooManyVars { vars, limit: GENERATOR_VAR_LIMIT });
    }
    if !truth_table_unsat(p)? {
        return Ok(Generated::Satisfiable);
    }
    let originals: Vec<Clause> = p.clauses.iter().map(|c| Clause::new(c.normalized())).collect();
    let mut g = Generator {
        style,
        clauses: (1..).zip(originals.iter().cloned()).collect(),
        units: originals
            .iter()
            .filter_map(|c| match c.literals() {
                [l] if l.is_positive() => Some(l.var()),
                _ => None,
            })
            .collect(),
        next_index: originals.len() as ChainIndex + 1,
        originals,
        derived: Vec::new(),
        values: vec![None; vars as usize + 1],
        trail: Vec::new(),
    };
    let (last, clause) = g.refute().expect("formula is unsatisfiable");
    debug_assert!(clause.is_empty());
    if g.derived.last().map(|c| c.index) != Some(last) {
        g.emit(Clause::default(), vec![last]);
    }
    let mut chains: Vec<Chain> =
        (1..).zip(&p.clauses).map(|(i, c)| Chain::original(i, c.clone())).collect();
    chains.append(&mut g.derived);
    Ok(Generated::Refutation(TraceFile::new(chains)))
}
