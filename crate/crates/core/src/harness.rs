//! Antecedent-ordering experiments, measured in kernel nodes rather than
//! seconds, and the reorderer that makes a trace checkable in strict mode.

pub mod corpus;
pub mod mutate;

use std::collections::HashSet;
use std::fmt;
use std::io::Write;

use itertools::Itertools;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::fpc::{check_chain, check_translated, CheckMode};
use crate::kernel::{CheckOptions, CheckReport, Rule, Slot, Verdict};
use crate::oracle::linear_order;
use crate::parse::{ChainIndex, TraceFile};
use crate::translate::{build_translated, TranslateError, TranslatedProblem};

pub const DEFAULT_SEED: u64 = 0x7ace_5eed;
pub const DEFAULT_BUDGET: u64 = 1_000_000;
pub const DEFAULT_SAMPLE_CAP: usize = 1000;
pub const DEFAULT_COMBO_CAP: u128 = 100_000;
/// Strict-mode permutations tried per chain when no cheaper order works.
pub const REORDER_SEARCH_CAP: usize = 40_320;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("trace has no derived chains")]
    NoDerivedChains,
    #[error("position {0} is out of range")]
    PositionOutOfRange(usize),
    #[error("position {0} holds an original clause, not a derived chain")]
    NotDerived(usize),
    #[error("{count} antecedent combinations exceed the cap of {cap}; use a smaller trace or raise the cap")]
    TooManyCombinations { count: u128, cap: u128 },
    #[error("the backtracking checker does not accept the trace ({0})")]
    NotAccepted(Verdict),
    #[error("no strict order found for chain {0}")]
    ReorderFailed(ChainIndex),
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentRecord {
    pub trace_id: String,
    /// The permuted chain, for experiments that permute a single chain.
    pub chain_index: Option<ChainIndex>,
    /// One group per permuted chain; experiment 1 lists the swapped pair.
    pub permutation: Vec<Vec<ChainIndex>>,
    pub mode: CheckMode,
    pub verdict: Verdict,
    pub nodes: u64,
    pub backtracks: u64,
    pub budget_hit: bool,
}

impl ExperimentRecord {
    fn new(
        trace_id: &str,
        chain_index: Option<ChainIndex>,
        permutation: Vec<Vec<ChainIndex>>,
        mode: CheckMode,
        report: CheckReport,
        budget: u64,
    ) -> Self {
        let budget_hit = report.verdict == Verdict::BudgetExhausted;
        ExperimentRecord {
            trace_id: trace_id.to_string(),
            chain_index,
            permutation,
            mode,
            nodes: if budget_hit { budget } else { report.nodes_visited },
            verdict: report.verdict,
            backtracks: report.backtracks,
            budget_hit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentSummary {
    pub records: usize,
    pub accepted: usize,
    pub timeouts: usize,
    /// Node statistics over the records that finished within budget.
    pub best_nodes: Option<u64>,
    pub worst_nodes: Option<u64>,
    pub median_nodes: Option<f64>,
    pub mean_nodes: Option<f64>,
    pub longest_chain_len: usize,
    pub avg_chain_len: f64,
    pub median_chain_len: f64,
}

impl ExperimentSummary {
    pub fn from_records(t: &TraceFile, records: &[ExperimentRecord]) -> Self {
        let mut nodes: Vec<u64> = records.iter().filter(|r| !r.budget_hit).map(|r| r.nodes).collect();
        nodes.sort_unstable();
        let lens: Vec<usize> = t.derived().map(|c| c.antecedents.len()).sorted().collect();
        ExperimentSummary {
            records: records.len(),
            accepted: records.iter().filter(|r| r.verdict == Verdict::Accepted).count(),
            timeouts: records.iter().filter(|r| r.budget_hit).count(),
            best_nodes: nodes.first().copied(),
            worst_nodes: nodes.last().copied(),
            median_nodes: median(&nodes.iter().map(|&n| n as f64).collect::<Vec<_>>()),
            mean_nodes: (!nodes.is_empty()).then(|| nodes.iter().sum::<u64>() as f64 / nodes.len() as f64),
            longest_chain_len: lens.last().copied().unwrap_or(0),
            avg_chain_len: if lens.is_empty() { 0.0 } else { lens.iter().sum::<usize>() as f64 / lens.len() as f64 },
            median_chain_len: median(&lens.iter().map(|&n| n as f64).collect::<Vec<_>>()).unwrap_or(0.0),
        }
    }

    /// Worst over best node count, when both exist.
    pub fn spread(&self) -> Option<f64> {
        Some(self.worst_nodes? as f64 / self.best_nodes?.max(1) as f64)
    }
}

fn median(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2]),
        _ => Some((sorted[n / 2 - 1] + sorted[n / 2]) / 2.0),
    }
}

fn opt<T: fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

impl fmt::Display for ExperimentSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "records {}", self.records)?;
        writeln!(f, "accepted {}", self.accepted)?;
        writeln!(f, "timeouts {}", self.timeouts)?;
        writeln!(f, "best_nodes {}", opt(self.best_nodes))?;
        writeln!(f, "worst_nodes {}", opt(self.worst_nodes))?;
        writeln!(f, "median_nodes {}", opt(self.median_nodes))?;
        writeln!(f, "mean_nodes {}", opt(self.mean_nodes.map(|m| format!("{m:.1}"))))?;
        writeln!(f, "longest_chain_len {}", self.longest_chain_len)?;
        writeln!(f, "avg_chain_len {:.2}", self.avg_chain_len)?;
        write!(f, "median_chain_len {}", self.median_chain_len)
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub records: Vec<ExperimentRecord>,
    pub summary: ExperimentSummary,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub trace_id: String,
    pub budget: u64,
    pub sample_cap: usize,
    pub combo_cap: u128,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            trace_id: "trace".to_string(),
            budget: DEFAULT_BUDGET,
            sample_cap: DEFAULT_SAMPLE_CAP,
            combo_cap: DEFAULT_COMBO_CAP,
            seed: DEFAULT_SEED,
        }
    }
}

impl ExperimentConfig {
    fn options(&self) -> CheckOptions {
        CheckOptions { node_budget: Some(self.budget), record_derivation: false }
    }
}

/// The derived chain with the most antecedents; the first one on ties.
pub fn find_longest_chain(t: &TraceFile) -> Result<ChainIndex, HarnessError> {
    t.derived()
        .fold(None, |best: Option<&crate::parse::Chain>, c| match best {
            Some(b) if b.antecedents.len() >= c.antecedents.len() => Some(b),
            _ => Some(c),
        })
        .map(|c| c.index)
        .ok_or(HarnessError::NoDerivedChains)
}

/// Exchanges the lines at positions `i` and `j`, both derived chains.
pub fn swap_chains(t: &TraceFile, i: usize, j: usize) -> Result<TraceFile, HarnessError> {
    for p in [i, j] {
        let chain = t.chains.get(p).ok_or(HarnessError::PositionOutOfRange(p))?;
        if chain.is_original() {
            return Err(HarnessError::NotDerived(p));
        }
    }
    let mut out = t.clone();
    out.chains.swap(i, j);
    Ok(out)
}

/// Positions of two adjacent derived chains where the later one does not
/// use the earlier, so swapping them keeps every reference backward.
pub fn independent_adjacent_pair(t: &TraceFile) -> Option<(usize, usize)> {
    (1..t.chains.len()).map(|j| (j - 1, j)).find(|&(i, j)| {
        let (a, b) = (&t.chains[i], &t.chains[j]);
        !a.is_original() && !b.is_original() && !b.antecedents.contains(&a.index)
    })
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).fold(1u128, |acc, k| acc.saturating_mul(k))
}

/// Product of the factorials of all derived chains' antecedent counts.
pub fn combination_count(t: &TraceFile) -> u128 {
    t.derived().fold(1u128, |acc, c| acc.saturating_mul(factorial(c.antecedents.len())))
}

/// The permutation of `0..n` with lexicographic rank `rank`.
fn unrank(n: usize, mut rank: u128) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(n);
    for k in (0..n).rev() {
        let f = factorial(k);
        let i = (rank / f) as usize;
        rank %= f;
        out.push(pool.remove(i));
    }
    out
}

/// All permutations of `0..n` in lexicographic order, or `cap` distinct
/// ones chosen uniformly at random and listed by rank.
fn permutations(n: usize, cap: usize, seed: u64) -> Vec<Vec<usize>> {
    let total = factorial(n);
    if total <= cap as u128 {
        return (0..n).permutations(n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match usize::try_from(total) {
        Ok(total) if n <= 20 => {
            let mut ranks = rand::seq::index::sample(&mut rng, total, cap).into_vec();
            ranks.sort_unstable();
            ranks.into_iter().map(|r| unrank(n, r as u128)).collect()
        }
        _ => {
            use rand::seq::SliceRandom;
            let mut seen = HashSet::new();
            let mut base: Vec<usize> = (0..n).collect();
            while seen.len() < cap {
                base.shuffle(&mut rng);
                seen.insert(base.clone());
            }
            seen.into_iter().sorted().collect()
        }
    }
}

fn translated(t: &TraceFile) -> Result<TranslatedProblem, HarnessError> {
    Ok(build_translated(t)?)
}

fn cut_position(tp: &TranslatedProblem, index: ChainIndex) -> usize {
    tp.cut_chains.iter().position(|c| c.index == index).expect("derived chain is a cut chain")
}

/// Swaps every pair of derived chains (up to `sample_cap` pairs, in
/// position order) and checks each result in backtracking mode.
pub fn run_experiment1(t: &TraceFile, config: &ExperimentConfig) -> Result<Experiment, HarnessError> {
    let derived: Vec<usize> = (0..t.chains.len()).filter(|&p| !t.chains[p].is_original()).collect();
    let pairs: Vec<(usize, usize)> = derived.iter().copied().array_combinations().map(|[i, j]| (i, j)).take(config.sample_cap).collect();
    let records = pairs
        .par_iter()
        .map(|&(i, j)| {
            let swapped = swap_chains(t, i, j)?;
            let tp = translated(&swapped)?;
            let report = check_translated(&tp, CheckMode::Backtracking, &config.options());
            let pair = vec![vec![t.chains[i].index, t.chains[j].index]];
            Ok(ExperimentRecord::new(&config.trace_id, None, pair, CheckMode::Backtracking, report, config.budget))
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let summary = ExperimentSummary::from_records(t, &records);
    Ok(Experiment { records, summary })
}

/// Checks the trace in backtracking mode once per permutation of its
/// longest chain's antecedents, leaving every other chain as it is.
pub fn run_experiment2(t: &TraceFile, config: &ExperimentConfig) -> Result<Experiment, HarnessError> {
    let target = find_longest_chain(t)?;
    let tp = translated(t)?;
    let pos = cut_position(&tp, target);
    let original = tp.cut_chains[pos].decide_list.clone();
    let perms = permutations(original.len(), config.sample_cap, config.seed);
    let records = perms
        .par_iter()
        .map(|perm| {
            let mut tp = tp.clone();
            let list: Vec<ChainIndex> = perm.iter().map(|&i| original[i]).collect();
            tp.cut_chains[pos].decide_list = list.clone();
            let report = check_translated(&tp, CheckMode::Backtracking, &config.options());
            ExperimentRecord::new(&config.trace_id, Some(target), vec![list], CheckMode::Backtracking, report, config.budget)
        })
        .collect::<Vec<_>>();
    let summary = ExperimentSummary::from_records(t, &records);
    Ok(Experiment { records, summary })
}

/// Checks every combination of antecedent orders, over all derived chains
/// at once, in strict mode.
pub fn run_experiment3(t: &TraceFile, config: &ExperimentConfig) -> Result<Experiment, HarnessError> {
    let count = combination_count(t);
    if count > config.combo_cap {
        return Err(HarnessError::TooManyCombinations { count, cap: config.combo_cap });
    }
    let tp = translated(t)?;
    let per_chain: Vec<Vec<Vec<usize>>> = tp
        .cut_chains
        .iter()
        .map(|c| (0..c.decide_list.len()).permutations(c.decide_list.len()).collect())
        .collect();
    let records = (0..count as u64)
        .into_par_iter()
        .map(|rank| {
            let mut tp = tp.clone();
            let mut rest = rank as usize;
            let mut digits = vec![0; per_chain.len()];
            for (k, perms) in per_chain.iter().enumerate().rev() {
                digits[k] = rest % perms.len();
                rest /= perms.len();
            }
            let mut groups = Vec::with_capacity(digits.len());
            for (k, chain) in tp.cut_chains.iter_mut().enumerate() {
                let list: Vec<ChainIndex> = per_chain[k][digits[k]].iter().map(|&i| chain.decide_list[i]).collect();
                chain.decide_list = list.clone();
                groups.push(list);
            }
            let report = check_translated(&tp, CheckMode::Strict, &config.options());
            ExperimentRecord::new(&config.trace_id, None, groups, CheckMode::Strict, report, config.budget)
        })
        .collect::<Vec<_>>();
    let summary = ExperimentSummary::from_records(t, &records);
    Ok(Experiment { records, summary })
}

pub const CSV_HEADER: [&str; 8] =
    ["trace_id", "chain_index", "permutation", "mode", "verdict", "nodes", "backtracks", "budget_hit"];

pub fn write_csv<W: Write>(records: &[ExperimentRecord], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        let permutation = r.permutation.iter().map(|g| g.iter().join(" ")).join(";");
        w.write_record([
            r.trace_id.clone(),
            r.chain_index.map(|c| c.to_string()).unwrap_or_default(),
            permutation,
            r.mode.to_string(),
            r.verdict.to_string(),
            r.nodes.to_string(),
            r.backtracks.to_string(),
            r.budget_hit.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// The indexed decides of each cut's left branch in the accepted
/// derivation, grouped by cut.
fn decides_per_cut(report: &CheckReport) -> Vec<Vec<ChainIndex>> {
    let mut groups: Vec<Vec<ChainIndex>> = Vec::new();
    for step in report.derivation.iter().flatten() {
        match (step.rule, step.slot) {
            (Rule::Cut, _) => groups.push(Vec::new()),
            (Rule::Decide, Some(Slot::Indexed(i))) => {
                if let Some(g) = groups.last_mut() {
                    if !g.contains(&i) {
                        g.push(i);
                    }
                }
            }
            _ => {}
        }
    }
    groups
}

fn strict_accepts(tp: &TranslatedProblem, pos: usize, list: &[ChainIndex]) -> bool {
    check_chain(tp, pos, list.to_vec(), CheckMode::Strict, &CheckOptions::default()).accepted()
}

/// An order for one chain that the strict checker accepts. Tries the order
/// the backtracking proof used, then the greedy unit-propagation order, then
/// a bounded search.
fn strict_order_for(t: &TraceFile, tp: &TranslatedProblem, pos: usize, used: &[ChainIndex]) -> Option<Vec<ChainIndex>> {
    let chain = &tp.cut_chains[pos];
    let mut from_proof = used.to_vec();
    from_proof.extend(chain.decide_list.iter().filter(|a| !used.contains(a)));
    if strict_accepts(tp, pos, &from_proof) {
        return Some(from_proof);
    }

    let clause_of = |i: ChainIndex| t.get(i).and_then(|c| c.clause()).cloned();
    let stop = t.position_of(chain.index).expect("chain is in the trace");
    let units: HashSet<_> = t
        .chains
        .iter()
        .enumerate()
        .filter(|(p, c)| c.is_original() || *p < stop)
        .filter_map(|(_, c)| match c.clause()?.literals() {
            [l] if l.is_positive() => Some(l.var()),
            _ => None,
        })
        .collect();
    let target = t.get(chain.index)?.clause()?.clone();
    let ants: Option<Vec<_>> = chain.decide_list.iter().map(|&i| clause_of(i)).collect();
    if let Some(order) = ants.and_then(|a| linear_order(&target, &a, &units)) {
        let list: Vec<ChainIndex> = order.iter().map(|&i| chain.decide_list[i]).collect();
        if strict_accepts(tp, pos, &list) {
            return Some(list);
        }
    }

    chain
        .decide_list
        .iter()
        .copied()
        .permutations(chain.decide_list.len())
        .take(REORDER_SEARCH_CAP)
        .find(|list| strict_accepts(tp, pos, list))
}

/// Rewrites every antecedent list into an order the strict checker accepts,
/// starting from the order the backtracking proof used.
pub fn reorder_trace(t: &TraceFile) -> Result<TraceFile, HarnessError> {
    let tp = translated(t)?;
    let report = check_translated(
        &tp,
        CheckMode::Backtracking,
        &CheckOptions { node_budget: None, record_derivation: true },
    );
    if !report.accepted() {
        return Err(HarnessError::NotAccepted(report.verdict));
    }
    let groups = decides_per_cut(&report);
    let mut out = t.clone();
    let mut tp_out = tp.clone();
    for (pos, used) in groups.iter().enumerate() {
        let index = tp.cut_chains[pos].index;
        let list = strict_order_for(t, &tp, pos, used).ok_or(HarnessError::ReorderFailed(index))?;
        let at = out.position_of(index).expect("chain is in the trace");
        out.chains[at].antecedents = list.clone();
        tp_out.cut_chains[pos].decide_list = list;
    }
    let strict = check_translated(&tp_out, CheckMode::Strict, &CheckOptions::default());
    if !strict.accepted() {
        let index = tp.cut_chains.get(groups.len().saturating_sub(1)).map_or(0, |c| c.index);
        return Err(HarnessError::ReorderFailed(index));
    }
    Ok(out)
}
