//! Phase bookkeeping for Dirac-comb assisted two-way sessions, and the
//! fault-injecting measurement simulator.
//!
//! A session runs between an initiator `A` (timestamps `t1`, `t4`) and a
//! responder `B` (`t2`, `t3`). Both nodes see the same impulse train of
//! period `T` and record, for every timestamp, the clock time elapsed since
//! the last impulse (`phi1..phi4`). The offset recovered from a session is
//! `c_B - c_A`.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::model::{FaultAssignment, GroundTruth, MeasurementSet, Topology};
use crate::rational::{self, Rational};

/// Timestamps and impulse phases of one request/reply exchange.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SessionTrace {
    pub t1: Rational,
    pub t2: Rational,
    pub t3: Rational,
    pub t4: Rational,
    pub phi1: Rational,
    pub phi2: Rational,
    pub phi3: Rational,
    pub phi4: Rational,
    pub period: Rational,
}

impl SessionTrace {
    pub fn validate(&self) -> Result<()> {
        if !self.period.is_positive() {
            return Err(Error::NonPositivePeriod);
        }
        for (name, phi) in [
            ("phi1", &self.phi1),
            ("phi2", &self.phi2),
            ("phi3", &self.phi3),
            ("phi4", &self.phi4),
        ] {
            if phi.is_negative() || *phi >= self.period {
                return Err(Error::InvalidTrace(format!("{name} outside [0, T)")));
            }
        }
        if self.t4 < self.t1 {
            return Err(Error::InvalidTrace("t4 precedes t1".into()));
        }
        if self.t3 < self.t2 {
            return Err(Error::InvalidTrace("t3 precedes t2".into()));
        }
        Ok(())
    }

    /// `(t4 - t1) - (t3 - t2)`.
    pub fn rtt(&self) -> Rational {
        (&self.t4 - &self.t1) - (&self.t3 - &self.t2)
    }

    /// Generates the trace a session would record under the given physical
    /// setup.
    pub fn forward(setup: &ForwardSession) -> Result<Self> {
        let period = &setup.period;
        if !period.is_positive() {
            return Err(Error::NonPositivePeriod);
        }
        if setup.request_delay.is_negative()
            || setup.reply_delay.is_negative()
            || setup.turnaround.is_negative()
        {
            return Err(Error::InvalidTrace("negative delay".into()));
        }
        let s1 = setup.send_time.clone();
        let s2 = &s1 + &setup.request_delay;
        let s3 = &s2 + &setup.turnaround;
        let s4 = &s3 + &setup.reply_delay;
        let phase = |s: &Rational| modulo(&(s - &setup.impulse_origin), period);
        let clock_b = &setup.clock_a + &setup.offset;
        Ok(Self {
            t1: &s1 + &setup.clock_a,
            t2: &s2 + &clock_b,
            t3: &s3 + &clock_b,
            t4: &s4 + &setup.clock_a,
            phi1: phase(&s1),
            phi2: phase(&s2),
            phi3: phase(&s3),
            phi4: phase(&s4),
            period: period.clone(),
        })
    }
}

/// Physical parameters for [`SessionTrace::forward`]. Times are on the
/// common reference timeline; clocks run at the same rate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForwardSession {
    /// `c_B - c_A`.
    pub offset: Rational,
    pub period: Rational,
    /// Any instant at which an impulse occurs.
    pub impulse_origin: Rational,
    /// Reading of A's clock minus reference time.
    pub clock_a: Rational,
    pub send_time: Rational,
    pub request_delay: Rational,
    pub turnaround: Rational,
    pub reply_delay: Rational,
}

/// `x mod T` in `[0, T)`.
fn modulo(x: &Rational, period: &Rational) -> Rational {
    x - period * (x / period).floor()
}

fn wrap(diff: Rational, period: &Rational) -> Rational {
    if diff.is_negative() {
        diff + period
    } else {
        diff
    }
}

/// `θ_q = φ2 - φ1` and `θ_p = φ4 - φ3`, each lifted by `T` when negative.
pub fn rounded_phase_differences(trace: &SessionTrace) -> (Rational, Rational) {
    let theta_q = wrap(&trace.phi2 - &trace.phi1, &trace.period);
    let theta_p = wrap(&trace.phi4 - &trace.phi3, &trace.period);
    (theta_q, theta_p)
}

/// Every offset consistent with a session's phases.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmbiguitySet {
    pub rtt: Rational,
    pub theta_q: Rational,
    pub theta_p: Rational,
    /// Admissible totals `s = i + j` of elapsed periods.
    pub period_sums: Vec<u64>,
    /// Ascending, pairwise distinct.
    pub candidates: Vec<Rational>,
}

/// Solves `RTT = θ_q + θ_p + s·T` for non-negative integers `s` and emits
/// one candidate offset per split `s = i + j`.
///
/// `slack` admits an `s` whose residual `RTT - θ_q - θ_p - s·T` is within
/// `±slack` (zero for exact traces). It must stay below `T/2` so at most one
/// `s` qualifies.
pub fn candidate_offsets(trace: &SessionTrace, slack: &Rational) -> Result<AmbiguitySet> {
    trace.validate()?;
    let period = &trace.period;
    if slack.is_negative() || slack * rational::int(2) >= *period {
        return Err(Error::InvalidTrace("slack must lie in [0, T/2)".into()));
    }
    let rtt = trace.rtt();
    if rtt.is_negative() {
        return Err(Error::NegativeRtt);
    }
    let (theta_q, theta_p) = rounded_phase_differences(trace);
    let spare = &rtt - &theta_q - &theta_p;
    let s = rational::round_half_away(&(&spare / period));
    let residual = &spare - Rational::from_integer(s.clone()) * period;
    if s.is_negative() || residual.abs() > *slack {
        return Err(Error::InconsistentTrace);
    }
    let s = s.to_u64().ok_or(Error::InconsistentTrace)?;
    let base = &trace.t2 - &trace.t1 - &theta_q;
    let candidates: BTreeSet<Rational> = (0..=s)
        .map(|i| &base - Rational::from_integer(BigInt::from(i)) * period)
        .collect();
    Ok(AmbiguitySet {
        rtt,
        theta_q,
        theta_p,
        period_sums: vec![s],
        candidates: candidates.into_iter().collect(),
    })
}

/// Measured offsets for every session: the true offset, plus the fault
/// magnitude on faulty sessions.
pub fn simulate_measurements(
    topo: &Topology,
    truth: &GroundTruth,
    faults: &FaultAssignment,
    period: &Rational,
) -> Result<MeasurementSet> {
    if !period.is_positive() {
        return Err(Error::NonPositivePeriod);
    }
    if truth.offsets().len() + 1 != topo.nodes() {
        return Err(Error::NodeCountMismatch {
            left: topo.nodes(),
            right: truth.offsets().len() + 1,
        });
    }
    faults.validate(topo)?;
    for p in faults.pairs() {
        let m = faults.magnitude(p).ok_or(Error::ZeroMagnitude(p))?;
        match rational::integer_multiple(m, period) {
            Some(n) if !n.is_zero() => {}
            _ => {
                return Err(Error::NotMultipleOfPeriod {
                    pair: p,
                    magnitude: rational::format(m),
                    period: rational::format(period),
                })
            }
        }
    }
    let values = topo
        .pairs()
        .iter()
        .map(|&p| match faults.magnitude(p) {
            Some(e) => truth.pair_offset(p) + e,
            None => truth.pair_offset(p),
        })
        .collect();
    MeasurementSet::from_row_values(topo, values)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SessionClass {
    Successful,
    /// Off by `n·T`.
    Faulty(BigInt),
}

/// Rounds the estimation error to whole periods. The residual must be
/// strictly below `T/2`; an exact half is a tie and is refused.
pub fn classify_session(
    measured: &Rational,
    reference: &Rational,
    period: &Rational,
) -> Result<SessionClass> {
    if !period.is_positive() {
        return Err(Error::NonPositivePeriod);
    }
    let err = measured - reference;
    let n = rational::round_half_away(&(&err / period));
    let residual = (&err - Rational::from_integer(n.clone()) * period).abs();
    if residual * rational::int(2) >= *period {
        return Err(Error::ClassificationTie);
    }
    Ok(if n.is_zero() {
        SessionClass::Successful
    } else {
        SessionClass::Faulty(n)
    })
}

/// Draws `n` uniformly from `[-bound, bound] \ {0}`.
pub fn sample_fault_multiple<R: rand::Rng + ?Sized>(rng: &mut R, bound: i64) -> i64 {
    assert!(bound >= 1, "fault bound must be positive");
    let v = rng.gen_range(1..=2 * bound);
    if v <= bound {
        v - bound - 1
    } else {
        v - bound
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Pair;
    use crate::rational::{frac, int};

    fn p(i: usize, j: usize) -> Pair {
        Pair::new(i, j).unwrap()
    }

    fn trace_with_phases(phi: [Rational; 4]) -> SessionTrace {
        let [phi1, phi2, phi3, phi4] = phi;
        SessionTrace {
            t1: int(0),
            t2: int(5),
            t3: int(6),
            t4: int(10),
            phi1,
            phi2,
            phi3,
            phi4,
            period: int(1),
        }
    }

    fn setup(offset: Rational, request: Rational, reply: Rational) -> ForwardSession {
        ForwardSession {
            offset,
            period: int(1),
            impulse_origin: frac(1, 7),
            clock_a: frac(13, 3),
            send_time: frac(41, 5),
            request_delay: request,
            turnaround: frac(1, 9),
            reply_delay: reply,
        }
    }

    #[test]
    fn rounded_differences_branches() {
        let t = trace_with_phases([frac(1, 4), frac(3, 4), frac(1, 2), frac(1, 2)]);
        assert_eq!(rounded_phase_differences(&t), (frac(1, 2), int(0)));
        let t = trace_with_phases([frac(3, 4), frac(1, 4), frac(0, 1), frac(0, 1)]);
        assert_eq!(rounded_phase_differences(&t).0, frac(1, 2));
    }

    #[test]
    fn trace_validation() {
        let mut t = trace_with_phases([int(0), int(0), int(0), int(1)]);
        assert!(t.validate().is_err());
        t.phi4 = int(0);
        assert!(t.validate().is_ok());
        t.t4 = int(-1);
        assert!(t.validate().is_err());
    }

    #[test]
    fn short_session_has_a_single_candidate() {
        let trace = SessionTrace::forward(&setup(frac(5, 2), frac(1, 5), frac(3, 10))).unwrap();
        let amb = candidate_offsets(&trace, &int(0)).unwrap();
        assert_eq!(amb.period_sums, vec![0]);
        assert_eq!(amb.candidates, vec![frac(5, 2)]);
    }

    #[test]
    fn two_plus_one_elapsed_periods() {
        // request spans two impulses, reply one: i = 2, j = 1
        let trace = SessionTrace::forward(&setup(frac(-7, 3), frac(23, 10), frac(13, 10))).unwrap();
        let amb = candidate_offsets(&trace, &int(0)).unwrap();
        assert_eq!(amb.period_sums, vec![3]);
        assert_eq!(amb.candidates.len(), 4);
        assert!(amb.candidates.contains(&frac(-7, 3)));
        for c in &amb.candidates {
            assert!((c - frac(-7, 3)).is_integer());
        }
    }

    #[test]
    fn inconsistent_and_negative_traces() {
        let mut trace = SessionTrace::forward(&setup(int(0), frac(1, 5), frac(1, 5))).unwrap();
        trace.t4 += frac(1, 2);
        assert_eq!(
            candidate_offsets(&trace, &int(0)),
            Err(Error::InconsistentTrace)
        );
        assert!(candidate_offsets(&trace, &frac(1, 2)).is_err());
        // a small displacement is absorbed by the slack window
        let mut shifted = SessionTrace::forward(&setup(int(0), frac(1, 5), frac(1, 5))).unwrap();
        shifted.t4 += frac(1, 200);
        assert_eq!(
            candidate_offsets(&shifted, &frac(1, 100))
                .unwrap()
                .candidates,
            vec![int(0)]
        );

        let mut negative = trace_with_phases([int(0), int(0), int(0), int(0)]);
        negative.t3 = int(20);
        negative.t4 = int(12);
        assert_eq!(
            candidate_offsets(&negative, &int(0)),
            Err(Error::NegativeRtt)
        );
    }

    #[test]
    fn simulate_fault_free_and_single_fault() {
        let topo = Topology::new(4).unwrap();
        let truth = GroundTruth::new(&topo, vec![int(1), int(2), int(3)]).unwrap();
        let none =
            simulate_measurements(&topo, &truth, &FaultAssignment::empty(), &int(1)).unwrap();
        for &q in topo.pairs() {
            assert_eq!(none.get(&topo, q), &truth.pair_offset(q));
        }
        let faults = FaultAssignment::with_magnitudes([(p(2, 0), int(2))]).unwrap();
        let meas = simulate_measurements(&topo, &truth, &faults, &int(1)).unwrap();
        assert_eq!(meas.get(&topo, p(2, 0)), &int(4));
        assert_eq!(meas.get(&topo, p(1, 0)), &int(1));
        assert_eq!(meas.get(&topo, p(3, 2)), &int(1));
    }

    #[test]
    fn simulate_rejects_bad_magnitudes() {
        let topo = Topology::new(4).unwrap();
        let truth = GroundTruth::zero(&topo);
        let half = FaultAssignment::with_magnitudes([(p(2, 0), frac(1, 2))]).unwrap();
        assert!(matches!(
            simulate_measurements(&topo, &truth, &half, &int(1)),
            Err(Error::NotMultipleOfPeriod { .. })
        ));
        let positions = FaultAssignment::positions([p(2, 0)]).unwrap();
        assert!(simulate_measurements(&topo, &truth, &positions, &int(1)).is_err());
        assert!(simulate_measurements(&topo, &truth, &FaultAssignment::empty(), &int(0)).is_err());
    }

    #[test]
    fn five_node_counterexample_measurements() {
        let topo = Topology::new(5).unwrap();
        let truth = GroundTruth::zero(&topo);
        let faults =
            FaultAssignment::with_magnitudes([(p(1, 0), int(1)), (p(4, 1), int(-1))]).unwrap();
        let meas = simulate_measurements(&topo, &truth, &faults, &int(1)).unwrap();
        let expected: Vec<Rational> = [1, 0, 0, 0, 0, 0, -1, 0, 0, 0]
            .iter()
            .map(|&v| int(v))
            .collect();
        assert_eq!(meas.values(), expected.as_slice());
    }

    #[test]
    fn classification() {
        let t = frac(1, 50);
        assert_eq!(
            classify_session(&int(3), &int(3), &t).unwrap(),
            SessionClass::Successful
        );
        assert_eq!(
            classify_session(&(int(3) + &t * int(3)), &int(3), &t).unwrap(),
            SessionClass::Faulty(BigInt::from(3))
        );
        assert_eq!(
            classify_session(&(int(3) + &t * frac(3, 10)), &int(3), &t).unwrap(),
            SessionClass::Successful
        );
        assert_eq!(
            classify_session(&(int(3) - &t * frac(5, 2)), &int(3), &t),
            Err(Error::ClassificationTie)
        );
    }

    #[test]
    fn fault_sampling_never_yields_zero() {
        use rand::SeedableRng;
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let mut seen = BTreeSet::new();
        for _ in 0..2000 {
            let n = sample_fault_multiple(&mut rng, 5);
            assert!(n != 0 && (-5..=5).contains(&n));
            seen.insert(n);
        }
        assert_eq!(seen.len(), 10);
    }
}
