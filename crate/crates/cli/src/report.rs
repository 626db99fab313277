//! JSON reports and their plain-text table renderings.

use std::fmt::Write as _;

use clocksync::model::FaultAssignment;
use clocksync::rational;
use clocksync::recovery::{RecoveryResult, Verdict};
use clocksync::resilience::{
    rounded_percent, tolerance_percentage, Completion, KVerdict, RankConditionCheck,
    ResilienceReport, UpperBoundCounterexample,
};
use clocksync::Rational;
use serde::Serialize;

use crate::files::{FaultEntry, NodeOffset, PairEntry};

pub const TOOL: &str = "clocksync";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn node_offsets(offsets: &[Rational]) -> Vec<NodeOffset> {
    offsets
        .iter()
        .enumerate()
        .map(|(j, d)| NodeOffset {
            node: j + 1,
            offset: rational::format(d),
        })
        .collect()
}

fn fault_entries(faults: &FaultAssignment) -> Vec<FaultEntry> {
    faults
        .magnitudes()
        .map(|(p, e)| FaultEntry {
            i: p.hi(),
            j: p.lo(),
            magnitude: rational::format(e),
        })
        .collect()
}

fn pair_entries(faults: &FaultAssignment) -> Vec<PairEntry> {
    faults.pairs().map(PairEntry::from).collect()
}

#[derive(Debug, Serialize)]
pub struct AlternativeReport {
    pub faults: Vec<FaultEntry>,
    pub offsets: Vec<NodeOffset>,
}

#[derive(Debug, Serialize)]
pub struct VerificationReport {
    pub verdict: &'static str,
    pub wrong_offsets: Vec<usize>,
    pub missed: Vec<PairEntry>,
    pub spurious: Vec<PairEntry>,
    pub wrong_magnitudes: Vec<PairEntry>,
}

impl From<&Verdict> for VerificationReport {
    fn from(v: &Verdict) -> Self {
        match v {
            Verdict::CorrectRecovery => Self {
                verdict: "correct",
                wrong_offsets: Vec::new(),
                missed: Vec::new(),
                spurious: Vec::new(),
                wrong_magnitudes: Vec::new(),
            },
            Verdict::WrongRecovery(m) => Self {
                verdict: "wrong",
                wrong_offsets: m.wrong_offsets.clone(),
                missed: m.missed.iter().copied().map(PairEntry::from).collect(),
                spurious: m.spurious.iter().copied().map(PairEntry::from).collect(),
                wrong_magnitudes: m
                    .wrong_magnitudes
                    .iter()
                    .copied()
                    .map(PairEntry::from)
                    .collect(),
            },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RecoverReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub n: usize,
    pub k_used: usize,
    pub offsets: Vec<NodeOffset>,
    pub faults: Vec<FaultEntry>,
    pub ambiguity: Vec<AlternativeReport>,
    pub placements_tested: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_seconds: Option<f64>,
}

impl RecoverReport {
    pub fn new(n: usize, r: &RecoveryResult, verdict: Option<&Verdict>) -> Self {
        Self {
            tool: TOOL,
            version: VERSION,
            command: "recover",
            n,
            k_used: r.k_used,
            offsets: node_offsets(&r.offsets),
            faults: fault_entries(&r.faults),
            ambiguity: r
                .ambiguity
                .iter()
                .map(|a| AlternativeReport {
                    faults: fault_entries(&a.faults),
                    offsets: node_offsets(&a.offsets),
                })
                .collect(),
            placements_tested: r.placements_tested,
            verification: verdict.map(VerificationReport::from),
            runtime_seconds: None,
        }
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        writeln!(s, "nodes              {}", self.n).unwrap();
        writeln!(s, "faults used        {}", self.k_used).unwrap();
        writeln!(s, "placements tested  {}", self.placements_tested).unwrap();
        writeln!(s).unwrap();
        writeln!(s, "node    offset").unwrap();
        for o in &self.offsets {
            writeln!(s, "{:<8}{}", o.node, o.offset).unwrap();
        }
        if !self.faults.is_empty() {
            writeln!(s).unwrap();
            writeln!(s, "session fault").unwrap();
            for f in &self.faults {
                writeln!(s, "{:<8}{}", format!("({},{})", f.i, f.j), f.magnitude).unwrap();
            }
        }
        if !self.ambiguity.is_empty() {
            writeln!(s).unwrap();
            writeln!(s, "other placements with {} faults:", self.k_used).unwrap();
            for a in &self.ambiguity {
                let cells: Vec<String> = a
                    .faults
                    .iter()
                    .map(|f| format!("({},{}):{}", f.i, f.j, f.magnitude))
                    .collect();
                writeln!(s, "  {}", cells.join(" ")).unwrap();
            }
        }
        if let Some(v) = &self.verification {
            writeln!(s).unwrap();
            writeln!(s, "verdict            {}", v.verdict).unwrap();
        }
        if let Some(t) = self.runtime_seconds {
            writeln!(s, "runtime            {t:.3} s").unwrap();
        }
        s
    }
}

#[derive(Debug, Serialize)]
pub struct WitnessReport {
    #[serde(rename = "K")]
    pub big_k: usize,
    pub k: usize,
    pub l: usize,
    pub actual: Vec<PairEntry>,
    pub estimated: Vec<PairEntry>,
    pub rank_a_prime: usize,
    pub required_rank: usize,
}

impl From<&RankConditionCheck> for WitnessReport {
    fn from(w: &RankConditionCheck) -> Self {
        Self {
            big_k: w.actual_count(),
            k: w.estimated_count(),
            l: w.l,
            actual: pair_entries(&w.actual),
            estimated: pair_entries(&w.estimated),
            rank_a_prime: w.rank_a_prime,
            required_rank: w.required_rank(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct KVerdictReport {
    #[serde(rename = "K")]
    pub big_k: usize,
    pub verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessReport>,
}

#[derive(Debug, Serialize)]
pub struct BoundReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub n: usize,
    pub sessions: usize,
    pub mode: String,
    pub rank_strategy: String,
    pub status: &'static str,
    pub lower_bound: Option<usize>,
    pub tolerance: Option<String>,
    pub tolerance_percent: Option<String>,
    pub verdicts: Vec<KVerdictReport>,
    pub actual_placements_examined: u64,
    pub rank_checks_performed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_seconds: Option<f64>,
}

impl BoundReport {
    pub fn new(r: &ResilienceReport) -> Self {
        let tolerance = tolerance_percentage(r);
        Self {
            tool: TOOL,
            version: VERSION,
            command: "bound",
            n: r.n,
            sessions: r.n * (r.n - 1) / 2,
            mode: r.mode.to_string(),
            rank_strategy: r.strategy.to_string(),
            status: match r.completion {
                Completion::Complete => "complete",
                Completion::Capped => "capped",
                Completion::BudgetExhausted => "incomplete",
            },
            lower_bound: r.lower_bound,
            tolerance_percent: tolerance.as_ref().map(|t| rounded_percent(t).to_string()),
            tolerance: tolerance.as_ref().map(rational::format),
            verdicts: r
                .verdicts
                .iter()
                .map(|(&big_k, v)| match v {
                    KVerdict::Verified => KVerdictReport {
                        big_k,
                        verdict: "verified",
                        witness: None,
                    },
                    KVerdict::Failed(w) => KVerdictReport {
                        big_k,
                        verdict: "failed",
                        witness: Some(WitnessReport::from(w)),
                    },
                })
                .collect(),
            actual_placements_examined: r.actual_placements_examined,
            rank_checks_performed: r.rank_checks_performed,
            runtime_seconds: None,
        }
    }
}

/// The two rows of the published table, one column per report.
pub fn bound_table(reports: &[BoundReport]) -> String {
    let cell = |v: Option<&str>, status: &str| match (v, status) {
        (Some(v), "complete") => v.to_string(),
        (Some(v), _) => format!(">={v}"),
        (None, _) => "?".to_string(),
    };
    let rows: [(&str, Vec<String>); 3] = [
        ("N", reports.iter().map(|r| r.n.to_string()).collect()),
        (
            "Lower bound of tolerable faults",
            reports
                .iter()
                .map(|r| cell(r.lower_bound.map(|l| l.to_string()).as_deref(), r.status))
                .collect(),
        ),
        (
            "Lower bound of tolerance (%)",
            reports
                .iter()
                .map(|r| cell(r.tolerance_percent.as_deref(), r.status))
                .collect(),
        ),
    ];
    let width = rows
        .iter()
        .flat_map(|(_, cells)| cells.iter().map(String::len))
        .max()
        .unwrap_or(1)
        .max(2);
    let mut s = String::new();
    for (label, cells) in &rows {
        write!(s, "{label:<32}").unwrap();
        for c in cells {
            write!(s, " {c:>width$}").unwrap();
        }
        writeln!(s).unwrap();
    }
    for r in reports {
        for v in &r.verdicts {
            if let Some(w) = &v.witness {
                let show = |ps: &[PairEntry]| {
                    ps.iter()
                        .map(|p| format!("({},{})", p.i, p.j))
                        .collect::<Vec<_>>()
                        .join(" ")
                };
                writeln!(
                    s,
                    "N={}: K={} fails for actual {} estimated {} (rank {} < {})",
                    r.n,
                    w.big_k,
                    show(&w.actual),
                    show(&w.estimated),
                    w.rank_a_prime,
                    w.required_rank
                )
                .unwrap();
            }
        }
        if r.status == "incomplete" {
            writeln!(
                s,
                "N={}: incomplete after {} rank checks",
                r.n, r.rank_checks_performed
            )
            .unwrap();
        }
    }
    if reports.iter().any(|r| r.runtime_seconds.is_some()) {
        for r in reports {
            writeln!(
                s,
                "N={}: {:.3} s",
                r.n,
                r.runtime_seconds.unwrap_or_default()
            )
            .unwrap();
        }
    }
    s
}

#[derive(Debug, Serialize)]
pub struct DependenceTerm {
    pub i: usize,
    pub j: usize,
    pub coefficient: i64,
}

#[derive(Debug, Serialize)]
pub struct CounterexampleReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub n: usize,
    #[serde(rename = "K")]
    pub big_k: usize,
    pub faults: Vec<PairEntry>,
    pub evidence: String,
    pub rank_a: usize,
    pub columns: usize,
    /// Fault columns whose combination equals the column of `δ̂_10`.
    pub offset_1_dependence: Vec<DependenceTerm>,
}

impl CounterexampleReport {
    pub fn new(c: &UpperBoundCounterexample) -> Self {
        Self {
            tool: TOOL,
            version: VERSION,
            command: "counterexample",
            n: c.n,
            big_k: c.faults.len(),
            faults: pair_entries(&c.faults),
            evidence: c.evidence.to_string(),
            rank_a: c.rank_a,
            columns: c.columns,
            offset_1_dependence: c
                .dependence
                .iter()
                .map(|&(p, coefficient)| DependenceTerm {
                    i: p.hi(),
                    j: p.lo(),
                    coefficient,
                })
                .collect(),
        }
    }

    pub fn table(&self) -> String {
        let faults: Vec<String> = self
            .faults
            .iter()
            .map(|p| format!("({},{})", p.i, p.j))
            .collect();
        let terms: Vec<String> = self
            .offset_1_dependence
            .iter()
            .map(|t| {
                let sign = if t.coefficient < 0 { "-" } else { "+" };
                format!("{sign} e({},{})", t.i, t.j)
            })
            .collect();
        let mut s = String::new();
        writeln!(s, "nodes      {}", self.n).unwrap();
        writeln!(s, "faults     {}", faults.join(" ")).unwrap();
        writeln!(s, "evidence   {}", self.evidence).unwrap();
        writeln!(s, "rank(A)    {} of {} columns", self.rank_a, self.columns).unwrap();
        writeln!(
            s,
            "d(1,0) column = {}",
            terms.join(" ").trim_start_matches("+ ")
        )
        .unwrap();
        s
    }
}
