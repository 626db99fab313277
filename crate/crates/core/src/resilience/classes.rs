//! Fault distributions up to renaming of nodes.
//!
//! A set of faulty sessions is an edge set of the complete graph. Two sets
//! related by a node permutation (node 0 included) have the same resilience
//! verdicts, so only one representative per orbit needs checking.
//!
//! The representative is the lexicographically smallest image of the edge
//! set, with edges compared as `(hi, lo)` and the set read in ascending
//! order. Under that order every edge among labels `0..m` precedes every edge
//! touching a label `>= m`, which lets [`canonical_form`] assign labels one at
//! a time and keep only the labelings whose partial edge list is minimal.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::model::{FaultAssignment, Pair, Permutation, Topology};

/// Canonical image of an edge set and a permutation that produces it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Canonical {
    /// Edges as `(hi, lo)`, ascending.
    pub edges: Vec<(usize, usize)>,
    pub perm: Permutation,
}

/// Compares the edges a new label would add; a strict extension wins
/// because the complete edge lists have equal length.
fn compare_level(a: &[usize], b: &[usize]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.cmp(y) {
            Ordering::Equal => {}
            other => return other,
        }
    }
    b.len().cmp(&a.len())
}

/// Smallest image of `edges` over all permutations of `0..n`.
pub fn canonical_form(n: usize, edges: &[Pair]) -> Canonical {
    let touched: Vec<usize> = edges
        .iter()
        .flat_map(|p| [p.hi(), p.lo()])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let t = touched.len();
    let local = |v: usize| touched.binary_search(&v).expect("touched vertex");
    let mut adj = vec![vec![false; t]; t];
    for p in edges {
        let (a, b) = (local(p.hi()), local(p.lo()));
        adj[a][b] = true;
        adj[b][a] = true;
    }

    // Each state: the touched vertices (local ids) in label order.
    let mut states: Vec<Vec<usize>> = vec![Vec::new()];
    let mut levels: Vec<Vec<usize>> = Vec::with_capacity(t);
    for _ in 0..t {
        let mut best: Option<Vec<usize>> = None;
        let mut next = Vec::new();
        for state in &states {
            for (v, row) in adj.iter().enumerate() {
                if state.contains(&v) {
                    continue;
                }
                let level: Vec<usize> = state
                    .iter()
                    .enumerate()
                    .filter(|&(_, &u)| row[u])
                    .map(|(label, _)| label)
                    .collect();
                let ord = best
                    .as_ref()
                    .map_or(Ordering::Less, |b| compare_level(&level, b));
                if ord == Ordering::Less {
                    best = Some(level);
                    next.clear();
                }
                if ord != Ordering::Greater {
                    let mut s = state.clone();
                    s.push(v);
                    next.push(s);
                }
            }
        }
        levels.push(best.expect("unlabelled vertex remains"));
        states = next;
    }

    let order = &states[0];
    let mut images = vec![usize::MAX; n];
    for (label, &v) in order.iter().enumerate() {
        images[touched[v]] = label;
    }
    for (free, img) in (t..).zip(images.iter_mut().filter(|i| **i == usize::MAX)) {
        *img = free;
    }
    let edges = levels
        .iter()
        .enumerate()
        .flat_map(|(hi, los)| los.iter().map(move |&lo| (hi, lo)))
        .collect();
    Canonical {
        edges,
        perm: Permutation::new(images).expect("labels form a bijection"),
    }
}

/// One representative per orbit of `k`-session fault sets under node
/// renaming, each in canonical form, sorted by canonical edge list.
pub fn enumerate_actual_classes(topo: &Topology, k: usize) -> Vec<FaultAssignment> {
    canonical_classes(topo, k)
        .into_iter()
        .map(|edges| {
            FaultAssignment::positions(
                edges
                    .into_iter()
                    .map(|(hi, lo)| Pair::new(hi, lo).expect("hi > lo")),
            )
            .expect("distinct edges")
        })
        .collect()
}

pub(crate) fn canonical_classes(topo: &Topology, k: usize) -> Vec<Vec<(usize, usize)>> {
    let n = topo.nodes();
    if k > topo.sessions() {
        return Vec::new();
    }
    let mut classes: BTreeSet<Vec<(usize, usize)>> = BTreeSet::from([Vec::new()]);
    for _ in 0..k {
        let mut grown = BTreeSet::new();
        for class in &classes {
            let present: BTreeSet<(usize, usize)> = class.iter().copied().collect();
            // new edges only need to touch the used labels plus two fresh ones
            let span = (class.iter().map(|e| e.0 + 1).max().unwrap_or(0) + 2).min(n);
            for hi in 1..span {
                for lo in 0..hi {
                    if present.contains(&(hi, lo)) {
                        continue;
                    }
                    let edges: Vec<Pair> = class
                        .iter()
                        .chain(std::iter::once(&(hi, lo)))
                        .map(|&(h, l)| Pair::new(h, l).expect("hi > lo"))
                        .collect();
                    grown.insert(canonical_form(n, &edges).edges);
                }
            }
        }
        classes = grown;
    }
    classes.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::relabel;
    use proptest::prelude::*;

    fn colex_sorted(edges: &[Pair]) -> Vec<(usize, usize)> {
        let mut v: Vec<(usize, usize)> = edges.iter().map(|p| (p.hi(), p.lo())).collect();
        v.sort_unstable();
        v
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for perm in permutations(n - 1) {
            for pos in 0..n {
                let mut p = perm.clone();
                p.insert(pos, n - 1);
                out.push(p);
            }
        }
        out
    }

    fn brute_canonical(n: usize, edges: &[Pair]) -> Vec<(usize, usize)> {
        permutations(n)
            .into_iter()
            .map(|images| {
                let perm = Permutation::new(images).unwrap();
                let mapped: Vec<Pair> = edges.iter().map(|&p| perm.map_pair(p).0).collect();
                colex_sorted(&mapped)
            })
            .min()
            .unwrap()
    }

    fn brute_orbit_count(n: usize, k: usize) -> usize {
        let topo = Topology::new(n).unwrap();
        let mut rows: Vec<usize> = (0..k).collect();
        let mut seen = BTreeSet::new();
        loop {
            let edges: Vec<Pair> = rows.iter().map(|&r| topo.pair_at(r)).collect();
            seen.insert(brute_canonical(n, &edges));
            if k == 0 || !crate::combinations::next_combination(&mut rows, topo.sessions()) {
                break;
            }
        }
        seen.len()
    }

    #[test]
    fn orbit_counts_match_brute_force() {
        let k4 = Topology::new(4).unwrap();
        assert_eq!(enumerate_actual_classes(&k4, 1).len(), 1);
        assert_eq!(enumerate_actual_classes(&k4, 2).len(), 2);
        assert_eq!(brute_orbit_count(4, 2), 2);
        let k5 = Topology::new(5).unwrap();
        assert_eq!(enumerate_actual_classes(&k5, 2).len(), 2);
        assert_eq!(brute_orbit_count(5, 2), 2);
        for (n, k) in [(4, 3), (5, 3), (5, 4), (6, 3), (6, 4), (4, 6), (5, 10)] {
            let topo = Topology::new(n).unwrap();
            assert_eq!(
                enumerate_actual_classes(&topo, k).len(),
                brute_orbit_count(n, k),
                "n={n} k={k}"
            );
        }
    }

    #[test]
    fn known_graph_counts() {
        // graphs with k edges and no isolated-vertex limit (n large enough)
        let topo = Topology::new(12).unwrap();
        let counts: Vec<usize> = (0..=6)
            .map(|k| enumerate_actual_classes(&topo, k).len())
            .collect();
        assert_eq!(counts, vec![1, 1, 2, 5, 11, 26, 68]);
    }

    #[test]
    fn matching_is_canonicalised() {
        let edges = [Pair::new(11, 10).unwrap(), Pair::new(5, 3).unwrap()];
        let c = canonical_form(12, &edges);
        assert_eq!(c.edges, vec![(1, 0), (3, 2)]);
        let mapped: Vec<Pair> = edges.iter().map(|&p| c.perm.map_pair(p).0).collect();
        assert_eq!(colex_sorted(&mapped), c.edges);
    }

    fn edge_set(n: usize) -> impl Strategy<Value = Vec<Pair>> {
        let m = n * (n - 1) / 2;
        prop::collection::btree_set(0..m, 0..=m.min(7)).prop_map(move |rows| {
            let topo = Topology::new(n).unwrap();
            rows.into_iter().map(|r| topo.pair_at(r)).collect()
        })
    }

    proptest! {
        #[test]
        fn canonical_form_is_the_brute_force_minimum(edges in edge_set(6)) {
            let c = canonical_form(6, &edges);
            prop_assert_eq!(&c.edges, &brute_canonical(6, &edges));
            let mapped: Vec<Pair> = edges.iter().map(|&p| c.perm.map_pair(p).0).collect();
            prop_assert_eq!(colex_sorted(&mapped), c.edges);
        }

        #[test]
        fn canonical_form_is_relabel_invariant(
            edges in edge_set(7),
            perm in Just((0..7).collect::<Vec<usize>>()).prop_shuffle(),
        ) {
            let perm = Permutation::new(perm).unwrap();
            let a = FaultAssignment::positions(edges.iter().copied()).unwrap();
            let b: Vec<Pair> = relabel(&a, &perm).pairs().collect();
            prop_assert_eq!(canonical_form(7, &edges).edges, canonical_form(7, &b).edges);
        }
    }
}
