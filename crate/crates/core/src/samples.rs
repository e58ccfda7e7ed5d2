//! Small reference inputs used by the test suites and the CLI self-checks.

/// A four-clause refutation over two variables: two derived chains, the
/// second deriving the empty clause.
pub const SQUARE_TRACE: &str = "1 1 2 0 0
2 -1 2 0 0
3 1 -2 0 0
4 -1 -2 0 0

5 1 0 3 1 0
6 0 4 2 5 0
";

/// The original clauses of [`SQUARE_TRACE`] as DIMACS.
pub const SQUARE_CNF: &str = "p cnf 2 4
1 2 0
-1 2 0
1 -2 0
-1 -2 0
";
