//! Seeded random CNF instances with generated refutations.

use rand::seq::index::sample;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formula::{Clause, Literal, Var};
use crate::oracle::{generate_trace_with, ChainStyle, Generated, OracleError};
use crate::parse::{CnfProblem, TraceFile};

#[derive(Debug, Clone)]
pub struct Instance {
    /// The seed that produced this instance.
    pub seed: u64,
    pub cnf: CnfProblem,
    pub trace: TraceFile,
}

/// `clauses` clauses, each over `width` distinct variables with random signs.
pub fn random_cnf(vars: Var, clauses: usize, width: usize, rng: &mut ChaCha8Rng) -> CnfProblem {
    let width = width.min(vars as usize);
    let clauses = (0..clauses)
        .map(|_| {
            let mut picked = sample(rng, vars as usize, width).into_vec();
            picked.sort_unstable();
            Clause::new(picked.into_iter().map(|v| Literal::new(v as Var + 1, rng.random_bool(0.5))).collect())
        })
        .collect();
    CnfProblem::new(vars, clauses)
}

/// A clause count at which random 3-CNF over `vars` variables is usually
/// unsatisfiable.
pub fn default_clause_count(vars: Var) -> usize {
    (vars as usize * 11).div_ceil(2).max(4)
}

/// Tries seeds `seed, seed + 1, ...` until one gives an unsatisfiable
/// instance, at most `attempts` times.
pub fn generate_unsat(
    vars: Var,
    clauses: usize,
    style: ChainStyle,
    seed: u64,
    attempts: u64,
) -> Result<Option<Instance>, OracleError> {
    for s in seed..seed.saturating_add(attempts) {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let cnf = random_cnf(vars, clauses, 3, &mut rng);
        if let Generated::Refutation(trace) = generate_trace_with(&cnf, style)? {
            return Ok(Some(Instance { seed: s, cnf, trace }));
        }
    }
    Ok(None)
}

/// `count` instances with variable counts cycling through `vars`, each
/// searched from its own seed.
pub fn corpus(count: usize, vars: std::ops::RangeInclusive<Var>, style: ChainStyle, seed: u64) -> Vec<Instance> {
    let span = (vars.end() - vars.start() + 1) as usize;
    (0..count)
        .map(|i| {
            let v = vars.start() + (i % span) as Var;
            let base = seed.wrapping_add(i as u64 * 1_000);
            generate_unsat(v, default_clause_count(v), style, base, 1_000)
                .expect("variable count within generator limit")
                .expect("an unsatisfiable instance within the attempt budget")
        })
        .collect()
}
