//! Nodes, sessions, fault placements and the two linear systems built from
//! them.
//!
//! Session rows follow one canonical order: first the reference sessions
//! `(j,0)` for `j = 1..N-1`, then the sessions `(i,j)` with `i > j >= 1`,
//! ordered by `j` and then by `i`. [`Pair`]'s `Ord` implements exactly this
//! order, so sorted pair sets and sorted row indices agree for every `N`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rational::Rational;

/// An unordered node pair, stored as `(hi, lo)` with `hi > lo`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Pair {
    hi: usize,
    lo: usize,
}

impl Pair {
    /// The session `(i, j)`; requires `i > j`.
    pub fn new(i: usize, j: usize) -> Option<Self> {
        (i > j).then_some(Self { hi: i, lo: j })
    }

    /// The session between two distinct nodes, in either order.
    pub fn between(a: usize, b: usize) -> Option<Self> {
        match a.cmp(&b) {
            Ordering::Greater => Some(Self { hi: a, lo: b }),
            Ordering::Less => Some(Self { hi: b, lo: a }),
            Ordering::Equal => None,
        }
    }

    pub fn hi(self) -> usize {
        self.hi
    }

    pub fn lo(self) -> usize {
        self.lo
    }

    pub fn touches(self, node: usize) -> bool {
        self.hi == node || self.lo == node
    }

    fn order_key(self) -> (bool, usize, usize) {
        (self.lo != 0, self.lo, self.hi)
    }
}

impl Ord for Pair {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order_key().cmp(&other.order_key())
    }
}

impl PartialOrd for Pair {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.hi, self.lo)
    }
}

/// A fully connected network of `n >= 3` nodes with its session indexing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    n: usize,
    pairs: Vec<Pair>,
    rows: Vec<usize>,
}

impl Topology {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::TooFewNodes(n));
        }
        let mut pairs: Vec<Pair> = (1..n).map(|j| Pair { hi: j, lo: 0 }).collect();
        for j in 1..n {
            for i in j + 1..n {
                pairs.push(Pair { hi: i, lo: j });
            }
        }
        let mut rows = vec![usize::MAX; n * n];
        for (r, p) in pairs.iter().enumerate() {
            rows[p.hi * n + p.lo] = r;
            rows[p.lo * n + p.hi] = r;
        }
        Ok(Self { n, pairs, rows })
    }

    pub fn nodes(&self) -> usize {
        self.n
    }

    /// `N(N-1)/2`.
    pub fn sessions(&self) -> usize {
        self.pairs.len()
    }

    pub fn pair(&self, i: usize, j: usize) -> Result<Pair> {
        match Pair::new(i, j) {
            Some(p) if i < self.n => Ok(p),
            _ => Err(Error::InvalidPair { i, j, n: self.n }),
        }
    }

    pub fn check(&self, p: Pair) -> Result<Pair> {
        self.pair(p.hi, p.lo)
    }

    /// Row of a session; panics if the pair is outside the network.
    pub fn row_of(&self, p: Pair) -> usize {
        self.rows[p.hi * self.n + p.lo]
    }

    /// Row of the session between two distinct nodes given in either order.
    pub fn row_between(&self, a: usize, b: usize) -> usize {
        self.rows[a * self.n + b]
    }

    pub fn pair_at(&self, row: usize) -> Pair {
        self.pairs[row]
    }

    /// All sessions in row order.
    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }
}

/// A bijection on node labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &v in &images {
            if v >= n || std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidPermutation(n));
            }
        }
        Ok(Self(images))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn apply(&self, node: usize) -> usize {
        self.0[node]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (i, &v) in self.0.iter().enumerate() {
            inv[v] = i;
        }
        Self(inv)
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    /// Image of a pair, plus whether its orientation flipped.
    pub fn map_pair(&self, p: Pair) -> (Pair, bool) {
        let (a, b) = (self.apply(p.hi), self.apply(p.lo));
        (Pair::between(a, b).expect("bijection"), a < b)
    }
}

/// A set of (hypothesized or actual) faulty sessions, optionally carrying
/// exact fault magnitudes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FaultAssignment {
    faults: BTreeMap<Pair, Option<Rational>>,
}

impl FaultAssignment {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Positions only. Duplicates are rejected.
    pub fn positions<I: IntoIterator<Item = Pair>>(pairs: I) -> Result<Self> {
        let mut faults = BTreeMap::new();
        for p in pairs {
            if faults.insert(p, None).is_some() {
                return Err(Error::DuplicatePair(p));
            }
        }
        Ok(Self { faults })
    }

    /// Positions with nonzero magnitudes.
    pub fn with_magnitudes<I: IntoIterator<Item = (Pair, Rational)>>(faults: I) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (p, m) in faults {
            if m.is_zero() {
                return Err(Error::ZeroMagnitude(p));
            }
            if map.insert(p, Some(m)).is_some() {
                return Err(Error::DuplicatePair(p));
            }
        }
        Ok(Self { faults: map })
    }

    pub fn len(&self) -> usize {
        self.faults.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faults.is_empty()
    }

    pub fn contains(&self, p: Pair) -> bool {
        self.faults.contains_key(&p)
    }

    /// Pairs in canonical row order.
    pub fn pairs(&self) -> impl Iterator<Item = Pair> + '_ {
        self.faults.keys().copied()
    }

    pub fn magnitude(&self, p: Pair) -> Option<&Rational> {
        self.faults.get(&p).and_then(Option::as_ref)
    }

    pub fn magnitudes(&self) -> impl Iterator<Item = (Pair, &Rational)> + '_ {
        self.faults
            .iter()
            .filter_map(|(p, m)| m.as_ref().map(|m| (*p, m)))
    }

    pub fn has_magnitudes(&self) -> bool {
        !self.faults.is_empty() && self.faults.values().all(Option::is_some)
    }

    /// The same positions without magnitudes.
    pub fn positions_only(&self) -> Self {
        Self {
            faults: self.faults.keys().map(|&p| (p, None)).collect(),
        }
    }

    pub fn validate(&self, topo: &Topology) -> Result<()> {
        for p in self.pairs() {
            topo.check(p)?;
        }
        Ok(())
    }

    pub fn rows(&self, topo: &Topology) -> Result<Vec<usize>> {
        self.pairs()
            .map(|p| topo.check(p).map(|p| topo.row_of(p)))
            .collect()
    }
}

impl fmt::Display for FaultAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.pairs().map(|p| p.to_string()).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Number of estimated positions that are actually faulty.
pub fn correctly_positioned_count(estimated: &FaultAssignment, actual: &FaultAssignment) -> usize {
    estimated.pairs().filter(|&p| actual.contains(p)).count()
}

/// Maps every pair through `perm`. A magnitude whose pair flips orientation
/// changes sign, since `e_ij = -e_ji`.
pub fn relabel(assignment: &FaultAssignment, perm: &Permutation) -> FaultAssignment {
    let faults = assignment
        .faults
        .iter()
        .map(|(&p, m)| {
            let (q, flipped) = perm.map_pair(p);
            let m = m
                .as_ref()
                .map(|m| if flipped { -m.clone() } else { m.clone() });
            (q, m)
        })
        .collect();
    FaultAssignment { faults }
}

/// One measured offset `c_i - c_j` per session, stored in row order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasurementSet {
    n: usize,
    values: Vec<Rational>,
}

impl MeasurementSet {
    pub fn from_pairs<I: IntoIterator<Item = (Pair, Rational)>>(
        topo: &Topology,
        measurements: I,
    ) -> Result<Self> {
        let mut slots: Vec<Option<Rational>> = vec![None; topo.sessions()];
        for (p, v) in measurements {
            let row = topo.row_of(topo.check(p)?);
            if slots[row].replace(v).is_some() {
                return Err(Error::DuplicatePair(p));
            }
        }
        let values = slots
            .into_iter()
            .enumerate()
            .map(|(row, v)| v.ok_or(Error::MissingMeasurement(topo.pair_at(row))))
            .collect::<Result<_>>()?;
        Ok(Self {
            n: topo.nodes(),
            values,
        })
    }

    pub fn from_row_values(topo: &Topology, values: Vec<Rational>) -> Result<Self> {
        if values.len() != topo.sessions() {
            return Err(Error::DimensionMismatch {
                expected: topo.sessions(),
                found: values.len(),
            });
        }
        Ok(Self {
            n: topo.nodes(),
            values,
        })
    }

    pub fn nodes(&self) -> usize {
        self.n
    }

    pub fn get(&self, topo: &Topology, p: Pair) -> &Rational {
        &self.values[topo.row_of(p)]
    }

    /// Values in row order.
    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    /// The same measurements under renamed nodes.
    pub fn relabel(&self, topo: &Topology, perm: &Permutation) -> Result<Self> {
        check_nodes(self.n, perm.len())?;
        let mut values = vec![Rational::zero(); self.values.len()];
        for (row, v) in self.values.iter().enumerate() {
            let (q, flipped) = perm.map_pair(topo.pair_at(row));
            values[topo.row_of(q)] = if flipped { -v.clone() } else { v.clone() };
        }
        Ok(Self { n: self.n, values })
    }
}

fn check_nodes(left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::NodeCountMismatch { left, right })
    }
}

/// True offsets `δ_j0` of nodes `1..N` against the reference node 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundTruth {
    offsets: Vec<Rational>,
}

impl GroundTruth {
    pub fn new(topo: &Topology, offsets: Vec<Rational>) -> Result<Self> {
        if offsets.len() != topo.nodes() - 1 {
            return Err(Error::DimensionMismatch {
                expected: topo.nodes() - 1,
                found: offsets.len(),
            });
        }
        Ok(Self { offsets })
    }

    pub fn zero(topo: &Topology) -> Self {
        Self {
            offsets: vec![Rational::zero(); topo.nodes() - 1],
        }
    }

    pub fn offsets(&self) -> &[Rational] {
        &self.offsets
    }

    /// `δ_node,0`, zero for the reference node.
    pub fn node_offset(&self, node: usize) -> Rational {
        if node == 0 {
            Rational::zero()
        } else {
            self.offsets[node - 1].clone()
        }
    }

    /// `δ_ij = δ_i0 - δ_j0`.
    pub fn pair_offset(&self, p: Pair) -> Rational {
        self.node_offset(p.hi) - self.node_offset(p.lo)
    }

    /// Ground truth after renaming nodes; offsets are re-referenced to
    /// whichever node is labelled 0 afterwards.
    pub fn relabel(&self, perm: &Permutation) -> Result<Self> {
        check_nodes(self.offsets.len() + 1, perm.len())?;
        let inv = perm.inverse();
        let new_ref = self.node_offset(inv.apply(0));
        let offsets = (1..perm.len())
            .map(|m| self.node_offset(inv.apply(m)) - &new_ref)
            .collect();
        Ok(Self { offsets })
    }
}

/// What a column of a system matrix stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unknown {
    /// `δ̂_j0`
    Offset(usize),
    /// `ê_p`
    Estimated(Pair),
    /// Actual fault `e_p` (re-vectorized systems only).
    Actual(Pair),
}

/// Column bookkeeping: offsets, then estimated faults, then actual faults,
/// each block in canonical pair order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnLayout {
    pub offset_cols: usize,
    pub estimated: Vec<Pair>,
    pub actual: Vec<Pair>,
}

impl ColumnLayout {
    pub fn total(&self) -> usize {
        self.offset_cols + self.estimated.len() + self.actual.len()
    }

    pub fn unknown(&self, col: usize) -> Unknown {
        let est_start = self.offset_cols;
        let act_start = est_start + self.estimated.len();
        if col < est_start {
            Unknown::Offset(col + 1)
        } else if col < act_start {
            Unknown::Estimated(self.estimated[col - est_start])
        } else {
            Unknown::Actual(self.actual[col - act_start])
        }
    }

    pub fn offset_col(&self, node: usize) -> usize {
        node - 1
    }

    pub fn estimated_col(&self, p: Pair) -> Option<usize> {
        self.estimated
            .iter()
            .position(|&q| q == p)
            .map(|i| self.offset_cols + i)
    }

    pub fn actual_col(&self, p: Pair) -> Option<usize> {
        self.actual
            .iter()
            .position(|&q| q == p)
            .map(|i| self.offset_cols + self.estimated.len() + i)
    }
}

/// `matrix · x = rhs` with its column meaning.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearSystem {
    pub matrix: Matrix,
    pub rhs: Vec<Rational>,
    pub layout: ColumnLayout,
}

fn offset_block(topo: &Topology, cols: usize) -> Matrix {
    let mut a = Matrix::zeros(topo.sessions(), cols).expect("n >= 3");
    for (row, p) in topo.pairs().iter().enumerate() {
        a.set(row, p.hi - 1, Rational::one());
        if p.lo != 0 {
            a.set(row, p.lo - 1, -Rational::one());
        }
    }
    a
}

/// `(A₁ A₂) x = b` for a hypothesized fault placement; `b` holds the
/// measurements.
pub fn build_estimation_system(
    topo: &Topology,
    estimated: &FaultAssignment,
    meas: &MeasurementSet,
) -> Result<LinearSystem> {
    estimated.validate(topo)?;
    check_nodes(topo.nodes(), meas.nodes())?;
    let layout = ColumnLayout {
        offset_cols: topo.nodes() - 1,
        estimated: estimated.pairs().collect(),
        actual: Vec::new(),
    };
    let mut matrix = offset_block(topo, layout.total());
    for (i, &p) in layout.estimated.iter().enumerate() {
        matrix.set(topo.row_of(p), layout.offset_cols + i, Rational::one());
    }
    Ok(LinearSystem {
        matrix,
        rhs: meas.values().to_vec(),
        layout,
    })
}

/// `(A₁ A₂ A₃) x' = b'` with the actual faults moved into the unknowns
/// (entering with -1) and `b'` holding fault-free true offsets.
pub fn build_revectorized_system(
    topo: &Topology,
    estimated: &FaultAssignment,
    actual: &FaultAssignment,
    truth: &GroundTruth,
) -> Result<LinearSystem> {
    estimated.validate(topo)?;
    actual.validate(topo)?;
    check_nodes(topo.nodes(), truth.offsets().len() + 1)?;
    let layout = ColumnLayout {
        offset_cols: topo.nodes() - 1,
        estimated: estimated.pairs().collect(),
        actual: actual.pairs().collect(),
    };
    let mut matrix = offset_block(topo, layout.total());
    let act_start = layout.offset_cols + layout.estimated.len();
    for (i, &p) in layout.estimated.iter().enumerate() {
        matrix.set(topo.row_of(p), layout.offset_cols + i, Rational::one());
    }
    for (i, &p) in layout.actual.iter().enumerate() {
        matrix.set(topo.row_of(p), act_start + i, -Rational::one());
    }
    let rhs = topo.pairs().iter().map(|&p| truth.pair_offset(p)).collect();
    Ok(LinearSystem {
        matrix,
        rhs,
        layout,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{classify_solve, rank, SolveOutcome};
    use crate::rational::int;
    use proptest::prelude::*;

    fn p(i: usize, j: usize) -> Pair {
        Pair::new(i, j).unwrap()
    }

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| int(x)).collect()
    }

    fn measurements(
        topo: &Topology,
        truth: &GroundTruth,
        faults: &[(Pair, i64)],
    ) -> MeasurementSet {
        let values = topo
            .pairs()
            .iter()
            .map(|&q| {
                let e = faults.iter().find(|(f, _)| *f == q).map_or(0, |f| f.1);
                truth.pair_offset(q) + int(e)
            })
            .collect();
        MeasurementSet::from_row_values(topo, values).unwrap()
    }

    #[test]
    fn canonical_row_order() {
        let topo = Topology::new(5).unwrap();
        let expected = [
            (1, 0),
            (2, 0),
            (3, 0),
            (4, 0),
            (2, 1),
            (3, 1),
            (4, 1),
            (3, 2),
            (4, 2),
            (4, 3),
        ];
        let got: Vec<(usize, usize)> = topo.pairs().iter().map(|q| (q.hi(), q.lo())).collect();
        assert_eq!(got, expected);
        let mut sorted = topo.pairs().to_vec();
        sorted.sort();
        assert_eq!(sorted, topo.pairs());
    }

    #[test]
    fn rejects_small_networks_and_bad_pairs() {
        assert_eq!(Topology::new(2), Err(Error::TooFewNodes(2)));
        let topo = Topology::new(4).unwrap();
        assert!(topo.pair(4, 1).is_err());
        assert!(topo.pair(1, 1).is_err());
        assert!(topo.pair(1, 2).is_err());
        let bad = FaultAssignment::positions([p(5, 0)]).unwrap();
        let meas = MeasurementSet::from_row_values(&topo, ints(&[0; 6])).unwrap();
        assert!(build_estimation_system(&topo, &bad, &meas).is_err());
    }

    #[test]
    fn measurement_set_must_be_complete_and_unique() {
        let topo = Topology::new(3).unwrap();
        let missing = MeasurementSet::from_pairs(&topo, [(p(1, 0), int(1)), (p(2, 0), int(2))]);
        assert_eq!(missing, Err(Error::MissingMeasurement(p(2, 1))));
        let dup = MeasurementSet::from_pairs(
            &topo,
            [(p(1, 0), int(1)), (p(1, 0), int(2)), (p(2, 1), int(2))],
        );
        assert_eq!(dup, Err(Error::DuplicatePair(p(1, 0))));
    }

    #[test]
    fn three_node_system_with_fault_on_21() {
        let topo = Topology::new(3).unwrap();
        let truth = GroundTruth::new(&topo, ints(&[1, 2])).unwrap();
        let meas = measurements(&topo, &truth, &[(p(2, 1), 3)]);
        let est = FaultAssignment::positions([p(1, 0)]).unwrap();
        let sys = build_estimation_system(&topo, &est, &meas).unwrap();
        let expected = Matrix::from_int_rows(&[[1, 0, 1], [0, 1, 0], [-1, 1, 0]]).unwrap();
        assert_eq!(sys.matrix, expected);
        assert_eq!(sys.rhs, ints(&[1, 2, 4]));
        assert_eq!(sys.layout.unknown(2), Unknown::Estimated(p(1, 0)));
    }

    #[test]
    fn four_node_system_with_fault_on_20() {
        let topo = Topology::new(4).unwrap();
        let truth = GroundTruth::new(&topo, ints(&[1, 2, 3])).unwrap();
        let meas = measurements(&topo, &truth, &[(p(2, 0), 5)]);
        let est = FaultAssignment::positions([p(1, 0)]).unwrap();
        let sys = build_estimation_system(&topo, &est, &meas).unwrap();
        // Rows (1,0),(2,0),(3,0),(2,1),(3,1),(3,2).
        let expected = Matrix::from_int_rows(&[
            [1, 0, 0, 1],
            [0, 1, 0, 0],
            [0, 0, 1, 0],
            [-1, 1, 0, 0],
            [-1, 0, 1, 0],
            [0, -1, 1, 0],
        ])
        .unwrap();
        assert_eq!(sys.matrix, expected);
        assert_eq!(sys.rhs, ints(&[1, 7, 3, 1, 2, 1]));
        assert_eq!(rank(&sys.matrix), 4);
    }

    #[test]
    fn fault_free_zero_network_solves_to_zero() {
        let topo = Topology::new(3).unwrap();
        let meas = MeasurementSet::from_row_values(&topo, ints(&[0, 0, 0])).unwrap();
        let sys = build_estimation_system(&topo, &FaultAssignment::empty(), &meas).unwrap();
        assert_eq!(sys.matrix.cols(), 2);
        assert_eq!(
            classify_solve(&sys.matrix, &sys.rhs).unwrap(),
            SolveOutcome::Unique(ints(&[0, 0]))
        );
    }

    #[test]
    fn revectorized_systems_on_four_nodes() {
        let topo = Topology::new(4).unwrap();
        let truth = GroundTruth::zero(&topo);
        let est = FaultAssignment::positions([p(1, 0)]).unwrap();
        let act = FaultAssignment::positions([p(2, 0)]).unwrap();
        let sys = build_revectorized_system(&topo, &est, &act, &truth).unwrap();
        let one_each = Matrix::from_int_rows(&[
            [1, 0, 0, 1, 0],
            [0, 1, 0, 0, -1],
            [0, 0, 1, 0, 0],
            [-1, 1, 0, 0, 0],
            [-1, 0, 1, 0, 0],
            [0, -1, 1, 0, 0],
        ])
        .unwrap();
        assert_eq!(sys.matrix, one_each);

        let est = FaultAssignment::positions([p(3, 0)]).unwrap();
        let act = FaultAssignment::positions([p(1, 0), p(2, 0)]).unwrap();
        let sys = build_revectorized_system(&topo, &est, &act, &truth).unwrap();
        let two_actual = Matrix::from_int_rows(&[
            [1, 0, 0, 0, -1, 0],
            [0, 1, 0, 0, 0, -1],
            [0, 0, 1, 1, 0, 0],
            [-1, 1, 0, 0, 0, 0],
            [-1, 0, 1, 0, 0, 0],
            [0, -1, 1, 0, 0, 0],
        ])
        .unwrap();
        assert_eq!(sys.matrix, two_actual);

        let est = FaultAssignment::positions([p(1, 0), p(3, 0)]).unwrap();
        let sys = build_revectorized_system(&topo, &est, &act, &truth).unwrap();
        let overlapping = Matrix::from_int_rows(&[
            [1, 0, 0, 1, 0, -1, 0],
            [0, 1, 0, 0, 0, 0, -1],
            [0, 0, 1, 0, 1, 0, 0],
            [-1, 1, 0, 0, 0, 0, 0],
            [-1, 0, 1, 0, 0, 0, 0],
            [0, -1, 1, 0, 0, 0, 0],
        ])
        .unwrap();
        assert_eq!(sys.matrix, overlapping);
        assert_eq!(sys.layout.actual_col(p(2, 0)), Some(6));
        assert_eq!(sys.layout.unknown(5), Unknown::Actual(p(1, 0)));
    }

    #[test]
    fn revectorized_rhs_holds_true_offsets() {
        let topo = Topology::new(4).unwrap();
        let truth = GroundTruth::new(&topo, ints(&[1, 2, 4])).unwrap();
        let sys = build_revectorized_system(
            &topo,
            &FaultAssignment::empty(),
            &FaultAssignment::empty(),
            &truth,
        )
        .unwrap();
        assert_eq!(sys.rhs, ints(&[1, 2, 4, 1, 3, 2]));
    }

    #[test]
    fn correct_positions() {
        let est = FaultAssignment::positions([p(1, 0), p(3, 0)]).unwrap();
        let act = FaultAssignment::positions([p(1, 0), p(2, 0)]).unwrap();
        assert_eq!(correctly_positioned_count(&est, &act), 1);
        assert_eq!(
            correctly_positioned_count(&FaultAssignment::empty(), &act),
            0
        );
        let same = FaultAssignment::positions([p(2, 1), p(4, 3)]).unwrap();
        assert_eq!(correctly_positioned_count(&same, &same), 2);
    }

    #[test]
    fn relabel_examples() {
        let swap12 = Permutation::new(vec![0, 2, 1]).unwrap();
        let a = FaultAssignment::positions([p(2, 1)]).unwrap();
        assert_eq!(relabel(&a, &swap12), a);

        let swap03 = Permutation::new(vec![3, 1, 2, 0]).unwrap();
        let a = FaultAssignment::positions([p(1, 0)]).unwrap();
        assert_eq!(
            relabel(&a, &swap03),
            FaultAssignment::positions([p(3, 1)]).unwrap()
        );

        let cycle = Permutation::new(vec![1, 2, 3, 0]).unwrap();
        let a = FaultAssignment::positions([p(2, 0), p(3, 1)]).unwrap();
        assert_eq!(
            relabel(&a, &cycle),
            FaultAssignment::positions([p(3, 1), p(2, 0)]).unwrap()
        );
    }

    #[test]
    fn relabel_flips_magnitude_sign_with_orientation() {
        let swap = Permutation::new(vec![0, 2, 1]).unwrap();
        let a = FaultAssignment::with_magnitudes([(p(2, 1), int(3)), (p(1, 0), int(2))]).unwrap();
        let b = relabel(&a, &swap);
        assert_eq!(b.magnitude(p(2, 1)), Some(&int(-3)));
        assert_eq!(b.magnitude(p(2, 0)), Some(&int(2)));
    }

    #[test]
    fn invalid_permutations() {
        assert!(Permutation::new(vec![0, 0, 1]).is_err());
        assert!(Permutation::new(vec![0, 3, 1]).is_err());
    }

    #[test]
    fn zero_magnitude_rejected() {
        assert_eq!(
            FaultAssignment::with_magnitudes([(p(1, 0), int(0))]),
            Err(Error::ZeroMagnitude(p(1, 0)))
        );
    }

    proptest! {
        #[test]
        fn row_index_is_a_bijection(n in 3usize..=12) {
            let topo = Topology::new(n).unwrap();
            prop_assert_eq!(topo.sessions(), n * (n - 1) / 2);
            for row in 0..topo.sessions() {
                let q = topo.pair_at(row);
                prop_assert_eq!(topo.row_of(q), row);
                prop_assert_eq!(topo.row_between(q.lo(), q.hi()), row);
            }
            for i in 1..n {
                for j in 0..i {
                    prop_assert_eq!(topo.pair_at(topo.row_of(p(i, j))), p(i, j));
                }
            }
        }

        #[test]
        fn true_placement_always_solves_the_system(
            n in 3usize..=6,
            seed_faults in prop::collection::btree_map(0usize..15, (1i64..=5, any::<bool>()), 0..4),
            offsets in prop::collection::vec(-20i64..=20, 5),
        ) {
            let topo = Topology::new(n).unwrap();
            let truth = GroundTruth::new(&topo, ints(&offsets[..n - 1])).unwrap();
            let faults: Vec<(Pair, i64)> = seed_faults
                .into_iter()
                .filter(|(r, _)| *r < topo.sessions())
                .map(|(r, (m, neg))| (topo.pair_at(r), if neg { -m } else { m }))
                .collect();
            let meas = measurements(&topo, &truth, &faults);
            let est = FaultAssignment::positions(faults.iter().map(|f| f.0)).unwrap();
            let sys = build_estimation_system(&topo, &est, &meas).unwrap();
            let mut x: Vec<Rational> = truth.offsets().to_vec();
            for &q in &sys.layout.estimated {
                x.push(int(faults.iter().find(|f| f.0 == q).unwrap().1));
            }
            prop_assert_eq!(sys.matrix.mul_vec(&x).unwrap(), sys.rhs);
        }

        #[test]
        fn relabel_round_trips(
            perm in Just((0..6).collect::<Vec<usize>>()).prop_shuffle(),
            rows in prop::collection::btree_set(0usize..15, 0..5),
        ) {
            let topo = Topology::new(6).unwrap();
            let perm = Permutation::new(perm).unwrap();
            let a = FaultAssignment::with_magnitudes(
                rows.iter().map(|&r| (topo.pair_at(r), int(r as i64 + 1))),
            ).unwrap();
            prop_assert_eq!(relabel(&relabel(&a, &perm), &perm.inverse()), a);
        }
    }
}
