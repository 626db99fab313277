//! Resilience bounds.
//!
//! A network is `K`-resilient when recovery corrects any `K` nonzero faults.
//! A sufficient condition: for every placement of `K` actual faults and every
//! placement of `k <= K` estimated faults, the re-vectorized matrix `A'` has
//! rank `N - 1 + k + K - l`, where `l` counts estimated faults that sit on
//! actually faulty sessions. [`lower_bound`] searches for the first `K` at
//! which the condition breaks.
//!
//! Two exact routes compute `rank(A')`:
//! - [`RankStrategy::Dense`] runs fraction-free elimination on the full
//!   integer matrix.
//! - [`RankStrategy::Graphic`] eliminates the unit columns of the fault
//!   blocks first: each faulty-or-estimated session `U` contributes one to
//!   the rank and removes its row, and the remaining rows of the offset block
//!   form the node-0-reduced incidence matrix of `K_N` minus `U`, whose rank
//!   is `N - (number of connected components)`.

mod classes;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::Zero;
use rayon::prelude::*;

use crate::combinations::{self, binomial, next_combination};
use crate::error::{Error, Result};
use crate::linalg::{self, classify_solve, IntMatrix, SolutionKind};
use crate::model::{
    build_estimation_system, build_revectorized_system, correctly_positioned_count,
    FaultAssignment, GroundTruth, Pair, Topology, Unknown,
};
use crate::phase::simulate_measurements;
use crate::rational::{self, Rational};
use crate::recovery::DEFAULT_MAX_NODES;

pub use classes::{canonical_form, enumerate_actual_classes, Canonical};

/// Outcome of the rank test for one (actual, estimated) pair of placements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankConditionCheck {
    pub n: usize,
    pub actual: FaultAssignment,
    pub estimated: FaultAssignment,
    /// Correctly positioned estimated faults.
    pub l: usize,
    pub rank_a_prime: usize,
    pub holds: bool,
}

impl RankConditionCheck {
    pub fn actual_count(&self) -> usize {
        self.actual.len()
    }

    pub fn estimated_count(&self) -> usize {
        self.estimated.len()
    }

    /// `N - 1 + k + K - l`.
    pub fn required_rank(&self) -> usize {
        self.n - 1 + self.estimated.len() + self.actual.len() - self.l
    }
}

impl fmt::Display for RankConditionCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "actual {} estimated {}: rank(A') = {}, required {} ({})",
            self.actual,
            self.estimated,
            self.rank_a_prime,
            self.required_rank(),
            if self.holds { "holds" } else { "fails" }
        )
    }
}

fn check_counts(actual: &FaultAssignment, estimated: &FaultAssignment) -> Result<()> {
    if estimated.len() > actual.len() {
        return Err(Error::EstimatedExceedsActual {
            k: estimated.len(),
            actual: actual.len(),
        });
    }
    Ok(())
}

/// Builds `A'` with rational entries and computes its rank exactly.
pub fn check_sufficient_condition(
    topo: &Topology,
    actual: &FaultAssignment,
    estimated: &FaultAssignment,
) -> Result<RankConditionCheck> {
    check_counts(actual, estimated)?;
    let sys = build_revectorized_system(topo, estimated, actual, &GroundTruth::zero(topo))?;
    let rank_a_prime = linalg::rank(&sys.matrix);
    Ok(finish_check(topo, actual, estimated, rank_a_prime))
}

/// Same contract as [`check_sufficient_condition`], using the chosen rank
/// route.
pub fn check_with(
    topo: &Topology,
    actual: &FaultAssignment,
    estimated: &FaultAssignment,
    strategy: RankStrategy,
) -> Result<RankConditionCheck> {
    check_counts(actual, estimated)?;
    let evaluator = RankEvaluator::new(topo, strategy);
    let rank = evaluator.rank(&actual.rows(topo)?, &estimated.rows(topo)?);
    Ok(finish_check(topo, actual, estimated, rank))
}

fn finish_check(
    topo: &Topology,
    actual: &FaultAssignment,
    estimated: &FaultAssignment,
    rank_a_prime: usize,
) -> RankConditionCheck {
    let l = correctly_positioned_count(estimated, actual);
    let mut check = RankConditionCheck {
        n: topo.nodes(),
        actual: actual.positions_only(),
        estimated: estimated.positions_only(),
        l,
        rank_a_prime,
        holds: false,
    };
    check.holds = check.rank_a_prime == check.required_rank();
    check
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum RankStrategy {
    /// Fraction-free elimination of the whole integer matrix.
    Dense,
    /// Unit-column elimination plus connected components.
    #[default]
    Graphic,
}

impl fmt::Display for RankStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RankStrategy::Dense => "dense",
            RankStrategy::Graphic => "graphic",
        })
    }
}

/// Computes `rank(A')` from row-index placements.
#[derive(Clone, Debug)]
pub struct RankEvaluator<'a> {
    topo: &'a Topology,
    strategy: RankStrategy,
}

impl<'a> RankEvaluator<'a> {
    pub fn new(topo: &'a Topology, strategy: RankStrategy) -> Self {
        // node sets are u64 masks
        let strategy = if topo.nodes() > 64 {
            RankStrategy::Dense
        } else {
            strategy
        };
        Self { topo, strategy }
    }

    pub fn rank(&self, actual_rows: &[usize], estimated_rows: &[usize]) -> usize {
        match self.strategy {
            RankStrategy::Dense => self.dense_rank(actual_rows, estimated_rows),
            RankStrategy::Graphic => self.graphic_rank(actual_rows, estimated_rows),
        }
    }

    fn dense_rank(&self, actual_rows: &[usize], estimated_rows: &[usize]) -> usize {
        let topo = self.topo;
        let m = topo.sessions();
        let offset_cols = topo.nodes() - 1;
        let cols = offset_cols + estimated_rows.len() + actual_rows.len();
        let mut data = vec![0i64; m * cols];
        for (row, p) in topo.pairs().iter().enumerate() {
            data[row * cols + p.hi() - 1] = 1;
            if p.lo() != 0 {
                data[row * cols + p.lo() - 1] = -1;
            }
        }
        for (i, &row) in estimated_rows.iter().enumerate() {
            data[row * cols + offset_cols + i] = 1;
        }
        let act_start = offset_cols + estimated_rows.len();
        for (i, &row) in actual_rows.iter().enumerate() {
            data[row * cols + act_start + i] = -1;
        }
        IntMatrix::new(m, cols, data).rank()
    }

    fn graphic_rank(&self, actual_rows: &[usize], estimated_rows: &[usize]) -> usize {
        let n = self.topo.nodes();
        let all: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let mut adj: [u64; 64] = [0; 64];
        for (v, a) in adj.iter_mut().enumerate().take(n) {
            *a = all & !(1u64 << v);
        }
        let mut removed = 0;
        for &row in actual_rows.iter().chain(estimated_rows) {
            let p = self.topo.pair_at(row);
            let bit_lo = 1u64 << p.lo();
            if adj[p.hi()] & bit_lo != 0 {
                adj[p.hi()] &= !bit_lo;
                adj[p.lo()] &= !(1u64 << p.hi());
                removed += 1;
            }
        }
        let mut unvisited = all;
        let mut components = 0;
        while unvisited != 0 {
            components += 1;
            let start = unvisited.trailing_zeros() as usize;
            let mut frontier = 1u64 << start;
            unvisited &= !frontier;
            while frontier != 0 {
                let v = frontier.trailing_zeros() as usize;
                frontier &= frontier - 1;
                let fresh = adj[v] & unvisited;
                unvisited &= !fresh;
                frontier |= fresh;
            }
        }
        removed + n - components
    }

    /// Whether the condition holds; `l` is computed from the sorted rows.
    pub fn holds(&self, actual_rows: &[usize], estimated_rows: &[usize]) -> bool {
        let l = estimated_rows
            .iter()
            .filter(|r| actual_rows.binary_search(r).is_ok())
            .count();
        let required = self.topo.nodes() - 1 + estimated_rows.len() + actual_rows.len() - l;
        self.rank(actual_rows, estimated_rows) == required
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum BoundMode {
    /// One actual placement per isomorphism class.
    #[default]
    Reduced,
    /// Every actual placement.
    Exhaustive,
}

impl fmt::Display for BoundMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundMode::Reduced => "reduced",
            BoundMode::Exhaustive => "exhaustive",
        })
    }
}

#[derive(Clone, Debug, Default)]
pub struct BoundOptions {
    pub mode: BoundMode,
    pub strategy: RankStrategy,
    /// Highest `K` to examine (default `N - 2`).
    pub max_k: Option<usize>,
    /// Wall-clock budget.
    pub deadline: Option<Duration>,
    /// Deterministic budget on rank evaluations; a block of checks that
    /// would exceed it is not started.
    pub max_rank_checks: Option<u64>,
    pub force: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KVerdict {
    Verified,
    Failed(RankConditionCheck),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Completion {
    /// A failing `K` was found, or every `K <= N - 2` passed.
    Complete,
    /// Stopped at the requested maximum `K` without a failure.
    Capped,
    /// Ran out of time or rank-check budget.
    BudgetExhausted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResilienceReport {
    pub n: usize,
    pub mode: BoundMode,
    pub strategy: RankStrategy,
    /// Largest `K` such that every `K' <= K` is verified; `None` if even
    /// `K = 0` was not finished.
    pub lower_bound: Option<usize>,
    pub verdicts: BTreeMap<usize, KVerdict>,
    pub completion: Completion,
    /// Actual placements examined (class representatives in reduced mode).
    pub actual_placements_examined: u64,
    pub rank_checks_performed: u64,
}

impl ResilienceReport {
    pub fn witness(&self) -> Option<&RankConditionCheck> {
        self.verdicts.values().find_map(|v| match v {
            KVerdict::Failed(w) => Some(w),
            KVerdict::Verified => None,
        })
    }

    pub fn is_complete(&self) -> bool {
        self.completion == Completion::Complete
    }
}

/// `lower_bound / (N(N-1)/2)`.
pub fn tolerance_percentage(report: &ResilienceReport) -> Option<Rational> {
    let sessions = report.n * (report.n - 1) / 2;
    report
        .lower_bound
        .map(|lb| rational::frac(lb as i64, sessions as i64))
}

/// Tolerance as a whole percentage, halves rounded up.
pub fn rounded_percent(tolerance: &Rational) -> BigInt {
    rational::round_half_away(&(tolerance * rational::int(100)))
}

enum BlockOutcome {
    Pass,
    Fail { rows: Vec<usize>, index: u64 },
    Aborted,
}

struct Budget {
    started: Instant,
    deadline: Option<Duration>,
    max_checks: Option<u64>,
    expired: AtomicBool,
}

impl Budget {
    fn time_left(&self) -> bool {
        if self.expired.load(Ordering::Relaxed) {
            return false;
        }
        match self.deadline {
            Some(d) if self.started.elapsed() >= d => {
                self.expired.store(true, Ordering::Relaxed);
                false
            }
            _ => true,
        }
    }
}

/// Finds the lexicographically first estimated placement of size `k` that
/// breaks the condition for `actual_rows`.
fn scan_block(
    eval: &RankEvaluator<'_>,
    actual_rows: &[usize],
    k: usize,
    budget: &Budget,
) -> BlockOutcome {
    let m = eval.topo.sessions();
    if k == 0 {
        return if eval.holds(actual_rows, &[]) {
            BlockOutcome::Pass
        } else {
            BlockOutcome::Fail {
                rows: Vec::new(),
                index: 0,
            }
        };
    }
    let result = (0..m).into_par_iter().map(|first| {
        let mut counter = 0u32;
        combinations::find_with_first(m, k, first, |est| {
            counter = counter.wrapping_add(1);
            if counter.is_multiple_of(4096) && !budget.time_left() {
                return Some(None);
            }
            (!eval.holds(actual_rows, est)).then(|| Some(est.to_vec()))
        })
    });
    match result.find_map_first(|r| r) {
        None if budget.expired.load(Ordering::Relaxed) => BlockOutcome::Aborted,
        None => BlockOutcome::Pass,
        Some(None) => BlockOutcome::Aborted,
        Some(Some(rows)) => {
            let index = combinations::lex_rank(&rows, m);
            BlockOutcome::Fail { rows, index }
        }
    }
}

/// Searches `K = 0, 1, ..., N-2` for the first `K` at which the rank
/// condition fails and reports `K - 1`; `N - 2` if none fails.
pub fn lower_bound(topo: &Topology, options: &BoundOptions) -> Result<ResilienceReport> {
    let n = topo.nodes();
    if n > DEFAULT_MAX_NODES && !options.force {
        return Err(Error::TooManyNodes {
            n,
            max: DEFAULT_MAX_NODES,
        });
    }
    let m = topo.sessions();
    let eval = RankEvaluator::new(topo, options.strategy);
    let budget = Budget {
        started: Instant::now(),
        deadline: options.deadline,
        max_checks: options.max_rank_checks,
        expired: AtomicBool::new(false),
    };
    let top = options.max_k.map_or(n - 2, |cap| cap.min(n - 2));
    let mut report = ResilienceReport {
        n,
        mode: options.mode,
        strategy: eval.strategy,
        lower_bound: None,
        verdicts: BTreeMap::new(),
        completion: Completion::Complete,
        actual_placements_examined: 0,
        rank_checks_performed: 0,
    };

    for big_k in 0..=top {
        let actual_sets: Vec<Vec<usize>> = match options.mode {
            BoundMode::Reduced => classes::canonical_classes(topo, big_k)
                .into_iter()
                .map(|edges| {
                    let mut rows: Vec<usize> = edges
                        .into_iter()
                        .map(|(hi, lo)| topo.row_between(hi, lo))
                        .collect();
                    rows.sort_unstable();
                    rows
                })
                .collect(),
            BoundMode::Exhaustive => all_subsets(m, big_k),
        };
        for actual_rows in &actual_sets {
            for k in 0..=big_k {
                let block = binomial(m, k);
                if let Some(max) = budget.max_checks {
                    if report.rank_checks_performed + block > max {
                        report.completion = Completion::BudgetExhausted;
                        return Ok(report);
                    }
                }
                if !budget.time_left() {
                    report.completion = Completion::BudgetExhausted;
                    return Ok(report);
                }
                match scan_block(&eval, actual_rows, k, &budget) {
                    BlockOutcome::Pass => report.rank_checks_performed += block,
                    BlockOutcome::Aborted => {
                        report.completion = Completion::BudgetExhausted;
                        return Ok(report);
                    }
                    BlockOutcome::Fail { rows, index } => {
                        report.rank_checks_performed += index + 1;
                        report.actual_placements_examined += 1;
                        let to_assignment = |rows: &[usize]| {
                            FaultAssignment::positions(rows.iter().map(|&r| topo.pair_at(r)))
                                .expect("distinct rows")
                        };
                        let actual = to_assignment(actual_rows);
                        let estimated = to_assignment(&rows);
                        let rank = eval.rank(actual_rows, &rows);
                        let witness = finish_check(topo, &actual, &estimated, rank);
                        report.verdicts.insert(big_k, KVerdict::Failed(witness));
                        return Ok(report);
                    }
                }
            }
            report.actual_placements_examined += 1;
        }
        report.verdicts.insert(big_k, KVerdict::Verified);
        report.lower_bound = Some(big_k);
    }
    if top < n - 2 {
        report.completion = Completion::Capped;
    }
    Ok(report)
}

fn all_subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut c: Vec<usize> = (0..k).collect();
    let mut out = vec![c.clone()];
    while k > 0 && next_combination(&mut c, m) {
        out.push(c.clone());
    }
    out
}

/// Evidence that `K >= N - 1` faults can defeat recovery.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpperBoundCounterexample {
    pub n: usize,
    /// All sessions of node 1, then the first other sessions in row order.
    pub faults: FaultAssignment,
    /// Classification of the estimation system whose placement equals the
    /// actual faults.
    pub evidence: SolutionKind,
    pub rank_a: usize,
    pub columns: usize,
    /// Coefficients on the fault columns that reproduce the `δ̂_10` column:
    /// `+1` on `ê_10` and `-1` on each `ê_i1`.
    pub dependence: Vec<(Pair, i64)>,
}

/// Builds the node-1 counterexample and checks it: with the true placement
/// the estimation system is consistent but rank deficient.
pub fn upper_bound_counterexample(
    topo: &Topology,
    big_k: usize,
) -> Result<UpperBoundCounterexample> {
    let n = topo.nodes();
    let m = topo.sessions();
    if big_k < n - 1 || big_k > m {
        return Err(Error::FaultCountOutOfRange {
            count: big_k,
            min: n - 1,
            max: m,
        });
    }
    let mut chosen: BTreeSet<Pair> = topo
        .pairs()
        .iter()
        .copied()
        .filter(|p| p.touches(1))
        .collect();
    for &p in topo.pairs() {
        if chosen.len() == big_k {
            break;
        }
        chosen.insert(p);
    }
    let one = rational::int(1);
    let faults = FaultAssignment::with_magnitudes(chosen.iter().map(|&p| (p, one.clone())))?;
    let meas = simulate_measurements(topo, &GroundTruth::zero(topo), &faults, &one)?;
    let positions = faults.positions_only();
    let sys = build_estimation_system(topo, &positions, &meas)?;
    let evidence = classify_solve(&sys.matrix, &sys.rhs)?.kind();
    let rank_a = linalg::rank(&sys.matrix);

    let dependence: Vec<(Pair, i64)> = chosen
        .iter()
        .filter(|p| p.touches(1))
        .map(|&p| (p, if p.lo() == 0 { 1 } else { -1 }))
        .collect();
    let mut combo = vec![Rational::zero(); sys.matrix.rows()];
    for &(p, c) in &dependence {
        let col = sys
            .layout
            .estimated_col(p)
            .expect("node-1 session is estimated");
        for (r, v) in combo.iter_mut().enumerate() {
            *v += sys.matrix.get(r, col) * rational::int(c);
        }
    }
    debug_assert_eq!(sys.layout.unknown(0), Unknown::Offset(1));
    debug_assert_eq!(combo, sys.matrix.column(0));

    Ok(UpperBoundCounterexample {
        n,
        faults: positions,
        evidence,
        rank_a,
        columns: sys.matrix.cols(),
        dependence,
    })
}
