//! Fault-tolerant network synchronization: the smallest number of faulty
//! sessions that explains every measurement exactly.
//!
//! For `k = 0, 1, 2, ...` every placement of `k` faults is tried in
//! lexicographic row order. A placement is accepted when its estimation
//! system has a unique solution whose fault estimates are all nonzero.
//! Underdetermined placements are skipped; a zero estimate means fewer
//! faults already explain the data.

use std::collections::BTreeMap;

use num_traits::Zero;
use rayon::prelude::*;

use crate::combinations;
use crate::error::{Error, Result};
use crate::linalg::{classify_solve, SolveOutcome};
use crate::model::{
    build_estimation_system, FaultAssignment, GroundTruth, MeasurementSet, Pair, Topology,
};
use crate::rational::Rational;

/// Networks larger than this need [`RecoveryOptions::force`].
pub const DEFAULT_MAX_NODES: usize = 12;

#[derive(Clone, Debug, Default)]
pub struct RecoveryOptions {
    pub force: bool,
    /// Stop at the first acceptable placement instead of scanning the rest
    /// of the minimal `k` for alternatives.
    pub first_only: bool,
    /// Give up with [`Error::Unrecoverable`] instead of trying more faults
    /// than this.
    pub max_faults: Option<usize>,
}

/// Another placement that explains the data with the same fault count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alternative {
    pub faults: FaultAssignment,
    pub offsets: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecoveryResult {
    pub k_used: usize,
    /// Estimated faulty sessions with their estimated magnitudes.
    pub faults: FaultAssignment,
    /// `δ̂_j0` for `j = 1..N-1`.
    pub offsets: Vec<Rational>,
    pub ambiguity: Vec<Alternative>,
    pub placements_tested: u64,
}

impl RecoveryResult {
    pub fn fault_positions(&self) -> FaultAssignment {
        self.faults.positions_only()
    }

    pub fn fault_magnitudes(&self) -> BTreeMap<Pair, Rational> {
        self.faults
            .magnitudes()
            .map(|(p, m)| (p, m.clone()))
            .collect()
    }

    /// Substitutes the recovered values back into every session.
    pub fn reproduces(&self, topo: &Topology, meas: &MeasurementSet) -> bool {
        let offset = |node: usize| {
            if node == 0 {
                Rational::zero()
            } else {
                self.offsets[node - 1].clone()
            }
        };
        topo.pairs().iter().all(|&p| {
            let fault = self
                .faults
                .magnitude(p)
                .cloned()
                .unwrap_or_else(Rational::zero);
            offset(p.hi()) - offset(p.lo()) + fault == *meas.get(topo, p)
        })
    }
}

pub fn recover(topo: &Topology, meas: &MeasurementSet) -> Result<RecoveryResult> {
    recover_with(topo, meas, &RecoveryOptions::default())
}

pub fn recover_with(
    topo: &Topology,
    meas: &MeasurementSet,
    options: &RecoveryOptions,
) -> Result<RecoveryResult> {
    if topo.nodes() > DEFAULT_MAX_NODES && !options.force {
        return Err(Error::TooManyNodes {
            n: topo.nodes(),
            max: DEFAULT_MAX_NODES,
        });
    }
    if meas.nodes() != topo.nodes() {
        return Err(Error::NodeCountMismatch {
            left: topo.nodes(),
            right: meas.nodes(),
        });
    }
    let m = topo.sessions();
    let mut tested = 0u64;
    for k in 0..=options.max_faults.map_or(m, |cap| cap.min(m)) {
        let found = accepted_at(topo, meas, k, options.first_only)?;
        let mut found = found.into_iter();
        let Some(first) = found.next() else {
            tested += combinations::binomial(m, k);
            continue;
        };
        tested += if options.first_only {
            combinations::lex_rank(&first.rows, m) + 1
        } else {
            combinations::binomial(m, k)
        };
        return Ok(RecoveryResult {
            k_used: k,
            faults: first.faults,
            offsets: first.offsets,
            ambiguity: found
                .map(|c| Alternative {
                    faults: c.faults,
                    offsets: c.offsets,
                })
                .collect(),
            placements_tested: tested,
        });
    }
    Err(Error::Unrecoverable)
}

struct Candidate {
    rows: Vec<usize>,
    faults: FaultAssignment,
    offsets: Vec<Rational>,
}

/// Acceptable placements of `k` faults, in lexicographic order.
fn accepted_at(
    topo: &Topology,
    meas: &MeasurementSet,
    k: usize,
    first_only: bool,
) -> Result<Vec<Candidate>> {
    let m = topo.sessions();
    if k == 0 {
        return Ok(evaluate(topo, meas, &[])?.into_iter().collect());
    }
    let chunk = |first: usize| -> Result<Vec<Candidate>> {
        let mut out = Vec::new();
        let mut failure = None;
        combinations::find_with_first(m, k, first, |rows| {
            match evaluate(topo, meas, rows) {
                Ok(Some(c)) => {
                    out.push(c);
                    if first_only {
                        return Some(());
                    }
                }
                Ok(None) => {}
                Err(e) => {
                    failure = Some(e);
                    return Some(());
                }
            }
            None
        });
        match failure {
            Some(e) => Err(e),
            None => Ok(out),
        }
    };
    if first_only {
        let hit = (0..m)
            .into_par_iter()
            .map(chunk)
            .find_map_first(|r| match r {
                Ok(v) if v.is_empty() => None,
                other => Some(other),
            });
        return hit.unwrap_or_else(|| Ok(Vec::new()));
    }
    let chunks: Vec<Vec<Candidate>> = (0..m).into_par_iter().map(chunk).collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

fn evaluate(topo: &Topology, meas: &MeasurementSet, rows: &[usize]) -> Result<Option<Candidate>> {
    let placement = FaultAssignment::positions(rows.iter().map(|&r| topo.pair_at(r)))?;
    let sys = build_estimation_system(topo, &placement, meas)?;
    let SolveOutcome::Unique(x) = classify_solve(&sys.matrix, &sys.rhs)? else {
        return Ok(None);
    };
    let (offsets, estimates) = x.split_at(sys.layout.offset_cols);
    if estimates.iter().any(Zero::is_zero) {
        return Ok(None);
    }
    let faults = FaultAssignment::with_magnitudes(
        sys.layout
            .estimated
            .iter()
            .copied()
            .zip(estimates.iter().cloned()),
    )?;
    Ok(Some(Candidate {
        rows: rows.to_vec(),
        faults,
        offsets: offsets.to_vec(),
    }))
}

/// Why a recovery disagrees with the injected ground truth.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RecoveryMismatch {
    /// Nodes whose recovered offset is wrong.
    pub wrong_offsets: Vec<usize>,
    /// Faulty sessions the recovery did not flag.
    pub missed: Vec<Pair>,
    /// Sessions flagged although they are fine.
    pub spurious: Vec<Pair>,
    /// Correctly flagged sessions with a wrong magnitude.
    pub wrong_magnitudes: Vec<Pair>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    CorrectRecovery,
    WrongRecovery(RecoveryMismatch),
}

impl Verdict {
    pub fn is_correct(&self) -> bool {
        matches!(self, Verdict::CorrectRecovery)
    }
}

/// Compares a recovery with the truth and the actual faults used to
/// generate its measurements. Magnitudes are compared only where `actual`
/// carries them.
pub fn verify_recovery(
    result: &RecoveryResult,
    truth: &GroundTruth,
    actual: &FaultAssignment,
) -> Verdict {
    let mut mismatch = RecoveryMismatch::default();
    for (i, (got, want)) in result.offsets.iter().zip(truth.offsets()).enumerate() {
        if got != want {
            mismatch.wrong_offsets.push(i + 1);
        }
    }
    if result.offsets.len() != truth.offsets().len() {
        mismatch
            .wrong_offsets
            .extend(result.offsets.len().min(truth.offsets().len()) + 1..=truth.offsets().len());
    }
    for p in actual.pairs() {
        match (result.faults.magnitude(p), actual.magnitude(p)) {
            (None, _) => mismatch.missed.push(p),
            (Some(got), Some(want)) if got != want => mismatch.wrong_magnitudes.push(p),
            _ => {}
        }
    }
    mismatch.spurious = result
        .faults
        .pairs()
        .filter(|&p| !actual.contains(p))
        .collect();
    if mismatch == RecoveryMismatch::default() {
        Verdict::CorrectRecovery
    } else {
        Verdict::WrongRecovery(mismatch)
    }
}
