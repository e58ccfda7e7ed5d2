//! Literals, clauses and the polarized formula language checked by the kernel.
//!
//! Only the connectives that arise from clausal input are representable:
//! positive conjunction, negative disjunction, the two units, and atoms of
//! either polarity. A positive disjunction or negative conjunction simply
//! has no constructor.

use std::fmt;
use std::sync::{Arc, LazyLock};

use thiserror::Error;

/// DIMACS variable identifier (always `>= 1`).
pub type Var = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    var: Var,
    positive: bool,
}

impl Literal {
    /// Panics if `var` is zero.
    pub fn new(var: Var, positive: bool) -> Self {
        assert!(var >= 1, "literal variable must be >= 1");
        Literal { var, positive }
    }

    /// Builds a literal from a signed DIMACS integer; `None` for `0` or a
    /// magnitude that does not fit a [`Var`].
    pub fn from_dimacs(value: i64) -> Option<Self> {
        if value == 0 {
            return None;
        }
        let var = Var::try_from(value.unsigned_abs()).ok()?;
        Some(Literal { var, positive: value > 0 })
    }

    pub fn to_dimacs(self) -> i64 {
        if self.positive {
            i64::from(self.var)
        } else {
            -i64::from(self.var)
        }
    }

    pub fn var(self) -> Var {
        self.var
    }

    pub fn is_positive(self) -> bool {
        self.positive
    }

    pub fn negated(self) -> Self {
        Literal { var: self.var, positive: !self.positive }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// A flat disjunction of literals in file order. The empty clause is `false`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Clause(Vec<Literal>);

impl Clause {
    pub fn new(literals: Vec<Literal>) -> Self {
        Clause(literals)
    }

    /// Panics on a zero entry; intended for tests and literal tables.
    pub fn from_dimacs(values: &[i64]) -> Self {
        Clause(
            values
                .iter()
                .map(|&v| Literal::from_dimacs(v).expect("nonzero literal"))
                .collect(),
        )
    }

    pub fn literals(&self) -> &[Literal] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Literal> {
        self.0.iter()
    }

    pub fn into_literals(self) -> Vec<Literal> {
        self.0
    }

    /// Sorted, duplicate-free literal list; the set view of the clause.
    pub fn normalized(&self) -> Vec<Literal> {
        let mut lits = self.0.clone();
        lits.sort_unstable();
        lits.dedup();
        lits
    }

    pub fn max_var(&self) -> Var {
        self.0.iter().map(|l| l.var()).max().unwrap_or(0)
    }
}

impl From<Vec<Literal>> for Clause {
    fn from(literals: Vec<Literal>) -> Self {
        Clause(literals)
    }
}

impl<'a> IntoIterator for &'a Clause {
    type Item = &'a Literal;
    type IntoIter = std::slice::Iter<'a, Literal>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, lit) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{lit}")?;
        }
        write!(f, "]")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Positive,
    Negative,
}

/// The kernel's formula language. Children are shared, so cloning is cheap.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PolarizedFormula {
    PosAtom(Var),
    NegAtom(Var),
    AndPos(Arc<PolarizedFormula>, Arc<PolarizedFormula>),
    OrNeg(Arc<PolarizedFormula>, Arc<PolarizedFormula>),
    True,
    False,
}

impl PolarizedFormula {
    pub fn and(left: PolarizedFormula, right: PolarizedFormula) -> Self {
        PolarizedFormula::AndPos(Arc::new(left), Arc::new(right))
    }

    pub fn or(left: PolarizedFormula, right: PolarizedFormula) -> Self {
        PolarizedFormula::OrNeg(Arc::new(left), Arc::new(right))
    }

    /// The atom a literal denotes, verbatim: `v` is `PosAtom v`, `-v` is `NegAtom v`.
    pub fn literal(lit: Literal) -> Self {
        if lit.is_positive() {
            PolarizedFormula::PosAtom(lit.var())
        } else {
            PolarizedFormula::NegAtom(lit.var())
        }
    }

    pub fn polarity(&self) -> Polarity {
        polarity(self)
    }

    pub fn is_positive(&self) -> bool {
        self.polarity() == Polarity::Positive
    }

    pub fn is_negative(&self) -> bool {
        self.polarity() == Polarity::Negative
    }

    pub fn negate(&self) -> Self {
        negate(self)
    }

    /// Every atom variable in the formula, left to right, with repeats.
    pub fn atoms(&self) -> Vec<Var> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(f) = stack.pop() {
            match f {
                PolarizedFormula::PosAtom(v) | PolarizedFormula::NegAtom(v) => out.push(*v),
                PolarizedFormula::AndPos(a, b) | PolarizedFormula::OrNeg(a, b) => {
                    stack.push(b);
                    stack.push(a);
                }
                PolarizedFormula::True | PolarizedFormula::False => {}
            }
        }
        out
    }

    /// Truth value under `assignment`, which maps variable `v` to entry `v`.
    /// Panics if a variable is out of range.
    pub fn evaluate(&self, assignment: &[bool]) -> bool {
        match self {
            PolarizedFormula::PosAtom(v) => assignment[*v as usize],
            PolarizedFormula::NegAtom(v) => !assignment[*v as usize],
            PolarizedFormula::AndPos(a, b) => a.evaluate(assignment) && b.evaluate(assignment),
            PolarizedFormula::OrNeg(a, b) => a.evaluate(assignment) || b.evaluate(assignment),
            PolarizedFormula::True => true,
            PolarizedFormula::False => false,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            PolarizedFormula::AndPos(a, b) | PolarizedFormula::OrNeg(a, b) => {
                1 + a.depth().max(b.depth())
            }
            _ => 0,
        }
    }
}

static PLACEHOLDER: LazyLock<Arc<PolarizedFormula>> =
    LazyLock::new(|| Arc::new(PolarizedFormula::True));

fn detach_unique_children(f: &mut PolarizedFormula, out: &mut Vec<Arc<PolarizedFormula>>) {
    if let PolarizedFormula::AndPos(a, b) | PolarizedFormula::OrNeg(a, b) = f {
        for child in [a, b] {
            if Arc::strong_count(child) == 1 {
                out.push(std::mem::replace(child, PLACEHOLDER.clone()));
            }
        }
    }
}

// Long disjunction spines would otherwise recurse once per level on drop.
impl Drop for PolarizedFormula {
    fn drop(&mut self) {
        let mut pending = Vec::new();
        detach_unique_children(self, &mut pending);
        while let Some(child) = pending.pop() {
            if let Some(mut inner) = Arc::into_inner(child) {
                detach_unique_children(&mut inner, &mut pending);
            }
        }
    }
}

impl fmt::Display for PolarizedFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolarizedFormula::PosAtom(v) => write!(f, "x({v})"),
            PolarizedFormula::NegAtom(v) => write!(f, "not(x({v}))"),
            PolarizedFormula::AndPos(a, b) => write!(f, "and({a},{b})"),
            PolarizedFormula::OrNeg(a, b) => write!(f, "or({a},{b})"),
            PolarizedFormula::True => write!(f, "true"),
            PolarizedFormula::False => write!(f, "false"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("empty clause has no conjunctive form")]
    EmptyClause,
}

pub fn polarity(f: &PolarizedFormula) -> Polarity {
    match f {
        PolarizedFormula::PosAtom(_) | PolarizedFormula::AndPos(..) | PolarizedFormula::True => {
            Polarity::Positive
        }
        PolarizedFormula::NegAtom(_) | PolarizedFormula::OrNeg(..) | PolarizedFormula::False => {
            Polarity::Negative
        }
    }
}

/// De Morgan dual.
pub fn negate(f: &PolarizedFormula) -> PolarizedFormula {
    match f {
        PolarizedFormula::PosAtom(v) => PolarizedFormula::NegAtom(*v),
        PolarizedFormula::NegAtom(v) => PolarizedFormula::PosAtom(*v),
        PolarizedFormula::AndPos(a, b) => PolarizedFormula::or(negate(a), negate(b)),
        PolarizedFormula::OrNeg(a, b) => PolarizedFormula::and(negate(a), negate(b)),
        PolarizedFormula::True => PolarizedFormula::False,
        PolarizedFormula::False => PolarizedFormula::True,
    }
}

fn right_nest(
    mut items: Vec<PolarizedFormula>,
    join: fn(PolarizedFormula, PolarizedFormula) -> PolarizedFormula,
) -> Option<PolarizedFormula> {
    let mut acc = items.pop()?;
    while let Some(next) = items.pop() {
        acc = join(next, acc);
    }
    Some(acc)
}

/// The negation of a clause as a right-nested positive conjunction of the
/// complemented literals.
pub fn clause_to_conjunction(c: &Clause) -> Result<PolarizedFormula, FormulaError> {
    let items = c
        .iter()
        .map(|&l| PolarizedFormula::literal(l.negated()))
        .collect();
    right_nest(items, PolarizedFormula::and).ok_or(FormulaError::EmptyClause)
}

/// The clause itself as a right-nested negative disjunction; `False` when empty.
pub fn clause_to_disjunction(c: &Clause) -> PolarizedFormula {
    let items = c.iter().map(|&l| PolarizedFormula::literal(l)).collect();
    right_nest(items, PolarizedFormula::or).unwrap_or(PolarizedFormula::False)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;
    use PolarizedFormula::*;

    fn p(v: Var) -> PolarizedFormula {
        PosAtom(v)
    }
    fn n(v: Var) -> PolarizedFormula {
        NegAtom(v)
    }

    pub(crate) fn arb_formula(depth: u32) -> impl Strategy<Value = PolarizedFormula> {
        let leaf = prop_oneof![
            (1u32..10).prop_map(PosAtom),
            (1u32..10).prop_map(NegAtom),
            Just(True),
            Just(False),
        ];
        leaf.prop_recursive(depth, 256, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| PolarizedFormula::and(a, b)),
                (inner.clone(), inner).prop_map(|(a, b)| PolarizedFormula::or(a, b)),
            ]
        })
    }

    fn arb_clause() -> impl Strategy<Value = Clause> {
        prop::collection::vec((1i64..8, any::<bool>()), 1..6).prop_map(|lits| {
            Clause::from_dimacs(
                &lits
                    .into_iter()
                    .map(|(v, s)| if s { v } else { -v })
                    .collect::<Vec<_>>(),
            )
        })
    }

    #[test]
    fn polarity_table() {
        assert_eq!(polarity(&PolarizedFormula::and(p(1), p(2))), Polarity::Positive);
        assert_eq!(polarity(&n(1)), Polarity::Negative);
        assert_eq!(polarity(&PolarizedFormula::or(n(1), p(2))), Polarity::Negative);
        assert_eq!(polarity(&True), Polarity::Positive);
        assert_eq!(polarity(&False), Polarity::Negative);
    }

    #[test]
    fn negate_examples() {
        assert_eq!(negate(&p(3)), n(3));
        assert_eq!(
            negate(&PolarizedFormula::and(p(1), n(2))),
            PolarizedFormula::or(n(1), p(2))
        );
        assert_eq!(negate(&True), False);
    }

    #[test]
    fn conjunction_of_negated_clause() {
        let c = Clause::from_dimacs(&[-1, 2, -4]);
        assert_eq!(
            clause_to_conjunction(&c).unwrap(),
            PolarizedFormula::and(p(1), PolarizedFormula::and(n(2), p(4)))
        );
        assert_eq!(clause_to_conjunction(&Clause::from_dimacs(&[1])).unwrap(), n(1));
        assert_eq!(
            clause_to_conjunction(&Clause::from_dimacs(&[1, 2])).unwrap(),
            PolarizedFormula::and(n(1), n(2))
        );
        assert_eq!(
            clause_to_conjunction(&Clause::default()),
            Err(FormulaError::EmptyClause)
        );
    }

    #[test]
    fn disjunction_of_clause() {
        let c = Clause::from_dimacs(&[-1, 2, -4]);
        assert_eq!(
            clause_to_disjunction(&c),
            PolarizedFormula::or(n(1), PolarizedFormula::or(p(2), n(4)))
        );
        assert_eq!(clause_to_disjunction(&Clause::default()), False);
        assert_eq!(clause_to_disjunction(&Clause::from_dimacs(&[1])), p(1));
    }

    #[test]
    fn display_uses_term_syntax() {
        let c = Clause::from_dimacs(&[-1, 2, -4]);
        assert_eq!(
            clause_to_conjunction(&c).unwrap().to_string(),
            "and(x(1),and(not(x(2)),x(4)))"
        );
    }

    #[test]
    fn deep_spines_drop_without_recursion() {
        let mut f = False;
        for v in 1..500_000 {
            f = PolarizedFormula::or(NegAtom(v), f);
        }
        let shared = f.clone();
        drop(f);
        assert_eq!(shared.atoms().len(), 499_999);
    }

    #[test]
    fn literal_rejects_zero() {
        assert_eq!(Literal::from_dimacs(0), None);
        assert_eq!(Literal::from_dimacs(-7).unwrap().to_dimacs(), -7);
        assert_eq!(Literal::from_dimacs(1 << 40), None);
    }

    #[test]
    fn negate_is_involution_on_random_formulas() {
        // Fixed-seed generation so the thousand formulas are reproducible.
        use proptest::strategy::ValueTree;
        use proptest::test_runner::{Config, TestRng, TestRunner};
        let mut runner = TestRunner::new_with_rng(
            Config::default(),
            TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
        );
        let strat = arb_formula(8);
        for _ in 0..1000 {
            let f = strat.new_tree(&mut runner).unwrap().current();
            assert!(f.depth() <= 8);
            assert_eq!(negate(&negate(&f)), f);
        }
    }

    proptest! {
        #[test]
        fn negation_flips_polarity(f in arb_formula(6)) {
            prop_assert_ne!(polarity(&negate(&f)), polarity(&f));
        }

        #[test]
        fn negation_flips_truth(f in arb_formula(5), bits in any::<u16>()) {
            let assignment: Vec<bool> = (0..16).map(|i| bits >> i & 1 == 1).collect();
            prop_assert_eq!(negate(&f).evaluate(&assignment), !f.evaluate(&assignment));
        }

        #[test]
        fn conjunction_is_negated_disjunction(c in arb_clause()) {
            prop_assert_eq!(clause_to_conjunction(&c).unwrap(), negate(&clause_to_disjunction(&c)));
        }

        #[test]
        fn translators_nest_to_the_right(c in arb_clause()) {
            let mut f = clause_to_disjunction(&c);
            let mut spine = 1;
            while let OrNeg(left, right) = &f {
                prop_assert!(!matches!(**left, OrNeg(..)));
                let next = (**right).clone();
                f = next;
                spine += 1;
            }
            prop_assert_eq!(spine, c.len());
        }
    }
}
