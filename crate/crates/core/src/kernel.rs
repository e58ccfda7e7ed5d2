//! The trusted checking engine for propositional focused sequents.
//!
//! Rules are tried in a fixed order with depth-first backtracking over the
//! candidates a [`Guidance`] hands back. Guidance only chooses among
//! alternatives the rules already allow (certificates, the cut formula, a
//! store or decide slot); it never touches the sequent, so any guidance is
//! sound and a restriction of the candidates can only lose proofs.
//!
//! Rule order, for a certificate `cert`:
//!
//! 1. `⇓ true` closes.
//! 2. `⇑ true, Γ` closes.
//! 3. `⇑ false, Γ` continues with `⇑ Γ`.
//! 4. init: `⇓ P` for an atom closes when `not(P)` is stored.
//! 5. release: `⇓ N` for negative `N` continues with `⇑ N`.
//! 6. cut: `⇑ ·` splits into `⇑ B` and `⇑ ¬B`.
//! 7. decide: `⇑ ·` focuses on a stored positive formula.
//! 8. and: `⇓ A ∧ B` needs `⇓ A` and `⇓ B`.
//! 9. or: `⇑ A ∨ B, Γ` continues with `⇑ A, B, Γ`.
//! 10. store a negative atom into the literal store.
//! 11. store a positive formula under the slot guidance picks.

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use thiserror::Error;

use crate::formula::{negate, PolarizedFormula, Var};
use crate::parse::ChainIndex;

/// Where a positive formula is stored. `Unindexed` entries share one bucket
/// and may repeat; indexed slots are unique.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    Indexed(ChainIndex),
    Unindexed,
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Indexed(i) => write!(f, "{i}"),
            Slot::Unindexed => write!(f, "-1"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GuidanceError {
    #[error("cut formula mentions variable 0")]
    MalformedCutFormula,
    #[error("slot {0} is already occupied")]
    SlotOccupied(ChainIndex),
    #[error("only positive formulas can be stored under a slot, got {0}")]
    NotPositive(PolarizedFormula),
}

/// The split context: positive formulas by slot, negative atoms by variable.
#[derive(Debug, Clone, Default)]
pub struct Storage {
    indexed: HashMap<ChainIndex, PolarizedFormula>,
    unindexed: Vec<PolarizedFormula>,
    negative: Vec<Var>,
    negative_count: HashMap<Var, usize>,
    // slot of each positive entry, oldest first
    history: Vec<Slot>,
}

impl Storage {
    pub fn new() -> Self {
        Storage::default()
    }

    pub fn store_positive(&mut self, slot: Slot, f: PolarizedFormula) -> Result<(), GuidanceError> {
        if !f.is_positive() {
            return Err(GuidanceError::NotPositive(f));
        }
        match slot {
            Slot::Indexed(i) => {
                if self.indexed.contains_key(&i) {
                    return Err(GuidanceError::SlotOccupied(i));
                }
                self.indexed.insert(i, f);
            }
            Slot::Unindexed => self.unindexed.push(f),
        }
        self.history.push(slot);
        Ok(())
    }

    pub fn store_negative(&mut self, var: Var) {
        self.negative.push(var);
        *self.negative_count.entry(var).or_default() += 1;
    }

    fn pop_positive(&mut self) {
        match self.history.pop() {
            Some(Slot::Indexed(i)) => {
                self.indexed.remove(&i);
            }
            Some(Slot::Unindexed) => {
                self.unindexed.pop();
            }
            None => unreachable!("pop without matching store"),
        }
    }

    fn pop_negative(&mut self) {
        let var = self.negative.pop().expect("pop without matching store");
        let count = self.negative_count.get_mut(&var).expect("counted");
        *count -= 1;
        if *count == 0 {
            self.negative_count.remove(&var);
        }
    }

    /// Formulas stored at `slot`, most recently stored first.
    pub fn lookup(&self, slot: Slot) -> Vec<PolarizedFormula> {
        match slot {
            Slot::Indexed(i) => self.indexed.get(&i).cloned().into_iter().collect(),
            Slot::Unindexed => self.unindexed.iter().rev().cloned().collect(),
        }
    }

    pub fn has_negative(&self, var: Var) -> bool {
        self.negative_count.contains_key(&var)
    }

    /// All positive entries, most recently stored first.
    pub fn positive_entries(&self) -> Vec<(Slot, PolarizedFormula)> {
        let mut unindexed = self.unindexed.iter().rev();
        self.history
            .iter()
            .rev()
            .map(|&slot| match slot {
                Slot::Indexed(i) => (slot, self.indexed[&i].clone()),
                Slot::Unindexed => (slot, unindexed.next().expect("bucket in sync").clone()),
            })
            .collect()
    }

    /// Stored negative atoms, oldest first.
    pub fn negative_atoms(&self) -> &[Var] {
        &self.negative
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Goal {
    Unfocused(Vec<PolarizedFormula>),
    Focused(PolarizedFormula),
}

/// The guidance callbacks consulted by each rule. Each returns the
/// alternatives to try, in order; an empty result makes the rule inapplicable.
pub trait Guidance {
    type Cert: Clone;

    fn cut(&self, cert: &Self::Cert) -> Vec<(Self::Cert, Self::Cert, PolarizedFormula)>;
    fn decide(&self, cert: &Self::Cert) -> Vec<(Self::Cert, Slot)>;
    fn store(&self, cert: &Self::Cert, formula: &PolarizedFormula) -> Vec<(Self::Cert, Slot)>;
    fn init(&self, cert: &Self::Cert) -> bool;
    fn release(&self, cert: &Self::Cert) -> Vec<Self::Cert>;
    fn and(&self, cert: &Self::Cert) -> Vec<(Self::Cert, Self::Cert)>;
    fn or(&self, cert: &Self::Cert) -> Vec<Self::Cert>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Accepted,
    Rejected,
    /// The node budget ran out before the search finished.
    BudgetExhausted,
    GuidanceError(GuidanceError),
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Accepted => write!(f, "accepted"),
            Verdict::Rejected => write!(f, "rejected"),
            Verdict::BudgetExhausted => write!(f, "budget"),
            Verdict::GuidanceError(e) => write!(f, "guidance error: {e}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    TrueFocused,
    TrueUnfocused,
    DropFalse,
    Init,
    Release,
    Cut,
    Decide,
    And,
    Or,
    StoreNegative,
    StorePositive,
}

/// One rule application in the accepted derivation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleApplication {
    pub rule: Rule,
    pub slot: Option<Slot>,
    pub depth: usize,
}

#[derive(Debug, Clone, Default)]
pub struct CheckOptions {
    pub node_budget: Option<u64>,
    /// Keep the applied rules of the accepted derivation, in pre-order.
    pub record_derivation: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub verdict: Verdict,
    pub nodes_visited: u64,
    pub max_depth: usize,
    /// Failed cut and decide alternatives.
    pub backtracks: u64,
    /// The subset of `backtracks` that were decides on an indexed slot.
    pub indexed_backtracks: u64,
    pub derivation: Option<Vec<RuleApplication>>,
}

impl CheckReport {
    pub fn accepted(&self) -> bool {
        self.verdict == Verdict::Accepted
    }
}

enum Abort {
    Budget,
    Guidance(GuidanceError),
}

struct Node {
    head: PolarizedFormula,
    tail: List,
}

type List = Option<Rc<Node>>;

fn cons(head: PolarizedFormula, tail: List) -> List {
    Some(Rc::new(Node { head, tail }))
}

struct Engine<'g, G: Guidance> {
    guide: &'g G,
    storage: Storage,
    budget: Option<u64>,
    nodes: u64,
    max_depth: usize,
    backtracks: u64,
    indexed_backtracks: u64,
    derivation: Option<Vec<RuleApplication>>,
}

const STACK_RED_ZONE: usize = 128 * 1024;
const STACK_GROWTH: usize = 8 * 1024 * 1024;

impl<G: Guidance> Engine<'_, G> {
    /// Counts one rule application and returns the derivation mark to roll back to.
    fn enter(&mut self, rule: Rule, slot: Option<Slot>, depth: usize) -> Result<usize, Abort> {
        if self.budget.is_some_and(|b| self.nodes >= b) {
            return Err(Abort::Budget);
        }
        self.nodes += 1;
        self.max_depth = self.max_depth.max(depth);
        Ok(match &mut self.derivation {
            Some(d) => {
                d.push(RuleApplication { rule, slot, depth });
                d.len() - 1
            }
            None => 0,
        })
    }

    fn rollback(&mut self, mark: usize) {
        if let Some(d) = &mut self.derivation {
            d.truncate(mark);
        }
    }

    fn unfocused(&mut self, cert: &G::Cert, gamma: &List, depth: usize) -> Result<bool, Abort> {
        stacker::maybe_grow(STACK_RED_ZONE, STACK_GROWTH, || {
            self.unfocused_step(cert, gamma, depth)
        })
    }

    fn focused(&mut self, cert: &G::Cert, f: &PolarizedFormula, depth: usize) -> Result<bool, Abort> {
        stacker::maybe_grow(STACK_RED_ZONE, STACK_GROWTH, || self.focused_step(cert, f, depth))
    }

    fn unfocused_step(&mut self, cert: &G::Cert, gamma: &List, depth: usize) -> Result<bool, Abort> {
        let Some(node) = gamma else {
            return self.empty_unfocused(cert, depth);
        };
        let tail = &node.tail;
        match &node.head {
            PolarizedFormula::True => {
                self.enter(Rule::TrueUnfocused, None, depth)?;
                Ok(true)
            }
            PolarizedFormula::False => {
                let mark = self.enter(Rule::DropFalse, None, depth)?;
                let ok = self.unfocused(cert, tail, depth + 1)?;
                if !ok {
                    self.rollback(mark);
                }
                Ok(ok)
            }
            PolarizedFormula::OrNeg(a, b) => {
                for next in self.guide.or(cert) {
                    let mark = self.enter(Rule::Or, None, depth)?;
                    let rest = cons((**a).clone(), cons((**b).clone(), tail.clone()));
                    if self.unfocused(&next, &rest, depth + 1)? {
                        return Ok(true);
                    }
                    self.rollback(mark);
                }
                Ok(false)
            }
            PolarizedFormula::NegAtom(v) => {
                for (next, _) in self.guide.store(cert, &node.head) {
                    let mark = self.enter(Rule::StoreNegative, None, depth)?;
                    self.storage.store_negative(*v);
                    let ok = self.unfocused(&next, tail, depth + 1);
                    self.storage.pop_negative();
                    if ok? {
                        return Ok(true);
                    }
                    self.rollback(mark);
                }
                Ok(false)
            }
            positive @ (PolarizedFormula::PosAtom(_) | PolarizedFormula::AndPos(..)) => {
                for (next, slot) in self.guide.store(cert, positive) {
                    let mark = self.enter(Rule::StorePositive, Some(slot), depth)?;
                    self.storage
                        .store_positive(slot, positive.clone())
                        .map_err(Abort::Guidance)?;
                    let ok = self.unfocused(&next, tail, depth + 1);
                    self.storage.pop_positive();
                    if ok? {
                        return Ok(true);
                    }
                    self.rollback(mark);
                }
                Ok(false)
            }
        }
    }

    fn empty_unfocused(&mut self, cert: &G::Cert, depth: usize) -> Result<bool, Abort> {
        for (left, right, formula) in self.guide.cut(cert) {
            if formula.atoms().contains(&0) {
                return Err(Abort::Guidance(GuidanceError::MalformedCutFormula));
            }
            let mark = self.enter(Rule::Cut, None, depth)?;
            let negated = negate(&formula);
            if self.unfocused(&left, &cons(formula, None), depth + 1)?
                && self.unfocused(&right, &cons(negated, None), depth + 1)?
            {
                return Ok(true);
            }
            self.rollback(mark);
            self.backtracks += 1;
        }
        for (next, slot) in self.guide.decide(cert) {
            for formula in self.storage.lookup(slot) {
                debug_assert!(formula.is_positive(), "stored formulas are positive");
                let mark = self.enter(Rule::Decide, Some(slot), depth)?;
                if self.focused(&next, &formula, depth + 1)? {
                    return Ok(true);
                }
                self.rollback(mark);
                self.backtracks += 1;
                if matches!(slot, Slot::Indexed(_)) {
                    self.indexed_backtracks += 1;
                }
            }
        }
        Ok(false)
    }

    fn focused_step(&mut self, cert: &G::Cert, f: &PolarizedFormula, depth: usize) -> Result<bool, Abort> {
        match f {
            PolarizedFormula::True => {
                self.enter(Rule::TrueFocused, None, depth)?;
                Ok(true)
            }
            PolarizedFormula::PosAtom(v) => {
                let mark = self.enter(Rule::Init, None, depth)?;
                let ok = self.guide.init(cert) && self.storage.has_negative(*v);
                if !ok {
                    self.rollback(mark);
                }
                Ok(ok)
            }
            PolarizedFormula::AndPos(a, b) => {
                for (first, second) in self.guide.and(cert) {
                    let mark = self.enter(Rule::And, None, depth)?;
                    if self.focused(&first, a, depth + 1)? && self.focused(&second, b, depth + 1)? {
                        return Ok(true);
                    }
                    self.rollback(mark);
                }
                Ok(false)
            }
            negative => {
                for next in self.guide.release(cert) {
                    let mark = self.enter(Rule::Release, None, depth)?;
                    if self.unfocused(&next, &cons(negative.clone(), None), depth + 1)? {
                        return Ok(true);
                    }
                    self.rollback(mark);
                }
                Ok(false)
            }
        }
    }
}

/// Runs the search to completion (or until the budget runs out).
pub fn check<G: Guidance>(
    cert: G::Cert,
    store: Storage,
    goal: Goal,
    guide: &G,
    options: &CheckOptions,
) -> CheckReport {
    let mut engine = Engine {
        guide,
        storage: store,
        budget: options.node_budget,
        nodes: 0,
        max_depth: 0,
        backtracks: 0,
        indexed_backtracks: 0,
        derivation: options.record_derivation.then(Vec::new),
    };
    let outcome = match goal {
        Goal::Focused(f) => engine.focused(&cert, &f, 0),
        Goal::Unfocused(formulas) => {
            let gamma = formulas.into_iter().rev().fold(None, |tail, f| cons(f, tail));
            engine.unfocused(&cert, &gamma, 0)
        }
    };
    let verdict = match outcome {
        Ok(true) => Verdict::Accepted,
        Ok(false) => Verdict::Rejected,
        Err(Abort::Budget) => Verdict::BudgetExhausted,
        Err(Abort::Guidance(e)) => Verdict::GuidanceError(e),
    };
    let derivation = match verdict {
        Verdict::Accepted => engine.derivation,
        _ => None,
    };
    CheckReport {
        verdict,
        nodes_visited: engine.nodes,
        max_depth: engine.max_depth,
        backtracks: engine.backtracks,
        indexed_backtracks: engine.indexed_backtracks,
        derivation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use PolarizedFormula::*;

    /// Guidance that allows everything: every cut formula from a fixed list
    /// (once each), every stored formula, every store under `Unindexed`.
    /// The certificate counts lemmas used and decides left.
    #[derive(Clone)]
    struct Open {
        lemmas: Vec<PolarizedFormula>,
    }

    type Fuel = (usize, u32);

    impl Guidance for Open {
        type Cert = Fuel;
        fn cut(&self, &(next, fuel): &Fuel) -> Vec<(Fuel, Fuel, PolarizedFormula)> {
            self.lemmas.get(next).map(|f| ((next + 1, fuel), (next + 1, fuel), f.clone())).into_iter().collect()
        }
        fn decide(&self, &(next, fuel): &Fuel) -> Vec<(Fuel, Slot)> {
            if fuel == 0 {
                return vec![];
            }
            vec![((next, fuel - 1), Slot::Unindexed)]
        }
        fn store(&self, cert: &Fuel, _: &PolarizedFormula) -> Vec<(Fuel, Slot)> {
            vec![(*cert, Slot::Unindexed)]
        }
        fn init(&self, _: &Fuel) -> bool {
            true
        }
        fn release(&self, cert: &Fuel) -> Vec<Fuel> {
            vec![*cert]
        }
        fn and(&self, cert: &Fuel) -> Vec<(Fuel, Fuel)> {
            vec![(*cert, *cert)]
        }
        fn or(&self, cert: &Fuel) -> Vec<Fuel> {
            vec![*cert]
        }
    }

    const START: Fuel = (0, 4);

    fn run(goal: Goal) -> CheckReport {
        check(START, Storage::new(), goal, &Open { lemmas: vec![] }, &CheckOptions::default())
    }

    #[test]
    fn focused_true_is_one_node() {
        let r = run(Goal::Focused(True));
        assert_eq!(r.verdict, Verdict::Accepted);
        assert_eq!(r.nodes_visited, 1);
    }

    #[test]
    fn excluded_middle() {
        let r = run(Goal::Unfocused(vec![PolarizedFormula::or(PosAtom(1), NegAtom(1))]));
        assert!(r.accepted());
    }

    #[test]
    fn lone_atom_is_unprovable() {
        assert_eq!(run(Goal::Unfocused(vec![PosAtom(1)])).verdict, Verdict::Rejected);
        assert_eq!(run(Goal::Unfocused(vec![])).verdict, Verdict::Rejected);
        assert_eq!(run(Goal::Focused(False)).verdict, Verdict::Rejected);
    }

    #[test]
    fn false_is_dropped() {
        let r = run(Goal::Unfocused(vec![False, True]));
        assert!(r.accepted());
        assert_eq!(r.nodes_visited, 2);
    }

    #[test]
    fn init_needs_stored_negation() {
        let mut store = Storage::new();
        store.store_negative(3);
        let guide = Open { lemmas: vec![] };
        let r = check(START, store, Goal::Focused(PosAtom(3)), &guide, &CheckOptions::default());
        assert!(r.accepted());
        let r = check(START, Storage::new(), Goal::Focused(PosAtom(3)), &guide, &CheckOptions::default());
        assert_eq!(r.verdict, Verdict::Rejected);
    }

    #[test]
    fn cut_supplies_lemma() {
        // Cut is tried before decide, so the lemma is introduced even though
        // the goal could be closed directly.
        let guide = Open { lemmas: vec![PolarizedFormula::or(PosAtom(1), NegAtom(1))] };
        let opts = CheckOptions { record_derivation: true, ..Default::default() };
        let goal = Goal::Unfocused(vec![NegAtom(1), PosAtom(1)]);
        let r = check(START, Storage::new(), goal, &guide, &opts);
        assert!(r.accepted());
        let rules: Vec<Rule> = r.derivation.unwrap().iter().map(|a| a.rule).collect();
        assert_eq!(rules.iter().filter(|&&r| r == Rule::Cut).count(), 1);
    }

    #[test]
    fn budget_stops_search() {
        let opts = CheckOptions { node_budget: Some(1), ..Default::default() };
        let guide = Open { lemmas: vec![] };
        let r = check(START, Storage::new(), Goal::Unfocused(vec![False, False, True]), &guide, &opts);
        assert_eq!(r.verdict, Verdict::BudgetExhausted);
        assert_eq!(r.nodes_visited, 1);
    }

    #[test]
    fn malformed_cut_is_a_guidance_error() {
        let guide = Open { lemmas: vec![PosAtom(0)] };
        let r = check(START, Storage::new(), Goal::Unfocused(vec![]), &guide, &CheckOptions::default());
        assert_eq!(r.verdict, Verdict::GuidanceError(GuidanceError::MalformedCutFormula));
    }

    #[test]
    fn occupied_slot_is_a_guidance_error() {
        struct Same;
        impl Guidance for Same {
            type Cert = ();
            fn cut(&self, _: &()) -> Vec<((), (), PolarizedFormula)> {
                vec![]
            }
            fn decide(&self, _: &()) -> Vec<((), Slot)> {
                vec![]
            }
            fn store(&self, _: &(), _: &PolarizedFormula) -> Vec<((), Slot)> {
                vec![((), Slot::Indexed(7))]
            }
            fn init(&self, _: &()) -> bool {
                true
            }
            fn release(&self, _: &()) -> Vec<()> {
                vec![()]
            }
            fn and(&self, _: &()) -> Vec<((), ())> {
                vec![((), ())]
            }
            fn or(&self, _: &()) -> Vec<()> {
                vec![()]
            }
        }
        let r = check((), Storage::new(), Goal::Unfocused(vec![PosAtom(1), PosAtom(2)]), &Same, &CheckOptions::default());
        assert_eq!(r.verdict, Verdict::GuidanceError(GuidanceError::SlotOccupied(7)));
    }

    #[test]
    fn storage_tracks_order_and_undo() {
        let mut s = Storage::new();
        s.store_positive(Slot::Indexed(4), PosAtom(1)).unwrap();
        s.store_positive(Slot::Unindexed, PosAtom(2)).unwrap();
        s.store_positive(Slot::Unindexed, PosAtom(3)).unwrap();
        assert_eq!(s.lookup(Slot::Unindexed), vec![PosAtom(3), PosAtom(2)]);
        assert_eq!(
            s.positive_entries(),
            vec![
                (Slot::Unindexed, PosAtom(3)),
                (Slot::Unindexed, PosAtom(2)),
                (Slot::Indexed(4), PosAtom(1)),
            ]
        );
        assert!(s.store_positive(Slot::Indexed(4), PosAtom(5)).is_err());
        assert!(s.store_positive(Slot::Unindexed, NegAtom(5)).is_err());
        s.pop_positive();
        assert_eq!(s.lookup(Slot::Unindexed), vec![PosAtom(2)]);
        s.store_negative(2);
        s.store_negative(2);
        s.pop_negative();
        assert!(s.has_negative(2));
        s.pop_negative();
        assert!(!s.has_negative(2));
    }

    #[test]
    fn deep_goals_do_not_overflow() {
        // A 20k-element disjunction spine recurses once per element.
        let mut f = True;
        for v in 1..20_000 {
            f = PolarizedFormula::or(NegAtom(v), f);
        }
        let r = run(Goal::Unfocused(vec![f]));
        assert!(r.accepted());
        assert!(r.max_depth > 20_000);
    }
}
