//! On-disk formats. Every rational is a string: an integer, `p/q`, or a
//! finite decimal on input; an integer or `p/q` on output.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use clocksync::model::{FaultAssignment, GroundTruth, MeasurementSet, Pair, Topology};
use clocksync::rational;
use clocksync::Rational;
use serde::{Deserialize, Serialize};

use crate::Invalid;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementFile {
    pub n: usize,
    /// Label for the offset unit; not interpreted.
    #[serde(default = "default_unit")]
    pub unit: String,
    pub measurements: Vec<MeasurementEntry>,
}

fn default_unit() -> String {
    "s".to_string()
}

/// Measured `c_i - c_j`, with `i > j`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementEntry {
    pub i: usize,
    pub j: usize,
    pub offset: String,
}

/// Ground truth written next to a simulated measurement file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthFile {
    pub n: usize,
    pub period: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub offsets: Vec<NodeOffset>,
    pub faults: Vec<FaultEntry>,
}

/// `δ_j0` for a node `j >= 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeOffset {
    pub node: usize,
    pub offset: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultEntry {
    pub i: usize,
    pub j: usize,
    pub magnitude: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairEntry {
    pub i: usize,
    pub j: usize,
}

impl From<Pair> for PairEntry {
    fn from(p: Pair) -> Self {
        Self {
            i: p.hi(),
            j: p.lo(),
        }
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text
}

fn parse(text: &str, what: impl FnOnce() -> String) -> Result<Rational> {
    rational::parse(text).with_context(what)
}

impl MeasurementFile {
    pub fn from_model(topo: &Topology, meas: &MeasurementSet, unit: &str) -> Self {
        Self {
            n: topo.nodes(),
            unit: unit.to_string(),
            measurements: topo
                .pairs()
                .iter()
                .map(|&p| MeasurementEntry {
                    i: p.hi(),
                    j: p.lo(),
                    offset: rational::format(meas.get(topo, p)),
                })
                .collect(),
        }
    }

    pub fn to_model(&self) -> Result<(Topology, MeasurementSet)> {
        let topo = Topology::new(self.n)?;
        let mut entries = Vec::with_capacity(self.measurements.len());
        for m in &self.measurements {
            let p = topo.pair(m.i, m.j)?;
            entries.push((p, parse(&m.offset, || format!("offset of session {p}"))?));
        }
        let meas = MeasurementSet::from_pairs(&topo, entries)?;
        Ok((topo, meas))
    }
}

impl TruthFile {
    pub fn from_model(
        truth: &GroundTruth,
        faults: &FaultAssignment,
        period: &Rational,
        seed: Option<u64>,
    ) -> Self {
        Self {
            n: truth.offsets().len() + 1,
            period: rational::format(period),
            seed,
            offsets: truth
                .offsets()
                .iter()
                .enumerate()
                .map(|(j, d)| NodeOffset {
                    node: j + 1,
                    offset: rational::format(d),
                })
                .collect(),
            faults: faults
                .magnitudes()
                .map(|(p, e)| FaultEntry {
                    i: p.hi(),
                    j: p.lo(),
                    magnitude: rational::format(e),
                })
                .collect(),
        }
    }

    pub fn to_model(&self, topo: &Topology) -> Result<(GroundTruth, FaultAssignment)> {
        if self.n != topo.nodes() {
            return Err(Invalid(format!(
                "truth file describes {} nodes, measurements {}",
                self.n,
                topo.nodes()
            ))
            .into());
        }
        let mut offsets = vec![None; topo.nodes() - 1];
        for o in &self.offsets {
            let slot = o
                .node
                .checked_sub(1)
                .and_then(|k| offsets.get_mut(k))
                .ok_or_else(|| Invalid(format!("truth offset for invalid node {}", o.node)))?;
            let value = parse(&o.offset, || format!("offset of node {}", o.node))?;
            if slot.replace(value).is_some() {
                return Err(Invalid(format!("duplicate truth offset for node {}", o.node)).into());
            }
        }
        let offsets = offsets
            .into_iter()
            .enumerate()
            .map(|(k, v)| {
                v.ok_or_else(|| Invalid(format!("missing truth offset for node {}", k + 1)))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let truth = GroundTruth::new(topo, offsets)?;
        let mut faults = Vec::with_capacity(self.faults.len());
        for f in &self.faults {
            let p = topo.pair(f.i, f.j)?;
            faults.push((
                p,
                parse(&f.magnitude, || format!("fault magnitude on {p}"))?,
            ));
        }
        Ok((truth, FaultAssignment::with_magnitudes(faults)?))
    }
}

/// Parses `"(2,0):2,(4,1):-1"` into whole multiples of the period per
/// session.
pub fn parse_fault_spec(spec: &str, topo: &Topology) -> Result<Vec<(Pair, i64)>> {
    let compact: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
    let mut out = Vec::new();
    let mut rest = compact.as_str();
    let bad = |why: &str| Invalid(format!("invalid fault spec {spec:?}: {why}"));
    while !rest.is_empty() {
        let body = rest.strip_prefix('(').ok_or_else(|| bad("expected '('"))?;
        let (pair, after) = body.split_once(')').ok_or_else(|| bad("missing ')'"))?;
        let (i, j) = pair
            .split_once(',')
            .ok_or_else(|| bad("pair needs two nodes"))?;
        let i: usize = i.parse().map_err(|_| bad("node is not an index"))?;
        let j: usize = j.parse().map_err(|_| bad("node is not an index"))?;
        let after = after
            .strip_prefix(':')
            .ok_or_else(|| bad("expected ':' after pair"))?;
        let (count, tail) = after.split_once(',').unwrap_or((after, ""));
        let count: i64 = count
            .parse()
            .map_err(|_| bad("multiple is not an integer"))?;
        out.push((topo.pair(i, j)?, count));
        rest = tail;
        if compact.ends_with(',') && rest.is_empty() {
            return Err(bad("trailing ','").into());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fault_spec_parses() {
        let topo = Topology::new(5).unwrap();
        let got = parse_fault_spec("(1,0):1, (4,1):-1", &topo).unwrap();
        assert_eq!(
            got,
            vec![
                (Pair::new(1, 0).unwrap(), 1),
                (Pair::new(4, 1).unwrap(), -1)
            ]
        );
        assert!(parse_fault_spec("(0,1):1", &topo).is_err());
        assert!(parse_fault_spec("(5,1):1", &topo).is_err());
        assert!(parse_fault_spec("(2,1)", &topo).is_err());
        assert!(parse_fault_spec("(2,1):x", &topo).is_err());
        assert!(parse_fault_spec("(2,1):1,", &topo).is_err());
        assert!(parse_fault_spec("", &topo).unwrap().is_empty());
    }

    #[test]
    fn measurement_file_round_trips() {
        let topo = Topology::new(3).unwrap();
        let meas = MeasurementSet::from_row_values(
            &topo,
            vec![
                rational::frac(1, 3),
                rational::int(-2),
                rational::frac(7, 2),
            ],
        )
        .unwrap();
        let file = MeasurementFile::from_model(&topo, &meas, "s");
        let text = to_json(&file);
        let back: MeasurementFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_model().unwrap().1, meas);
    }
}
