use std::collections::HashSet;

use helab_core::he::{HeConfig, Interleave};
use helab_core::{EventTimeline, Family, Millis};
use helab_probe::lab::{Lab, RunError};
use helab_probe::{infer_cad_from_timeline, sweep, ClientProfile, SimLab, TargetKind, TestPlan};
use proptest::prelude::*;

fn he(cad: Millis, rd: Millis) -> ClientProfile {
    ClientProfile::HappyEyeballs { he: HeConfig::v2().with_cad(cad).with_resolution_delay(rd) }
}

fn sim_sweep(profile: ClientProfile, kind: TargetKind, reps: u32) -> helab_probe::SweepOutcome {
    let mut plan = TestPlan::simulated(profile, kind);
    plan.repetitions = reps;
    let mut lab = SimLab::from_plan(&plan).unwrap();
    sweep(&plan, &mut lab).unwrap()
}

#[test]
fn run_point_examples() {
    let plan = TestPlan::simulated(he(250, 50), TargetKind::Cad);
    let mut lab = SimLab::from_plan(&plan).unwrap();
    let t = lab.run_point(&plan, 300, "n1").unwrap();
    let v6 = t.first_attempt(Family::V6).unwrap();
    assert_eq!(t.first_attempt(Family::V4), Some(v6 + 250));
    assert_eq!(infer_cad_from_timeline(&t), Ok(250));

    let t = lab.run_point(&plan, 0, "n2").unwrap();
    assert_eq!(t.attempts().count(), 1);
    assert_eq!(t.first_attempt(Family::V4), None);
}

#[test]
fn cad_closed_loop() {
    for cad in [200, 250, 300, 2000] {
        let v = sim_sweep(he(cad, 50), TargetKind::Cad, 3).verdict;
        assert!(v.cad_impl && v.prefers_ipv6, "cad {cad}: {v:?}");
        let est = v.cad_estimate_ms.unwrap();
        assert!((est - cad as f64).abs() <= 5.0, "cad {cad}: estimate {est}");
        assert!(v.cad_interval.is_none());
        let t = v.cad_transition.unwrap();
        assert!(t.hi - t.lo <= 5 && t.lo < cad + 1 && cad <= t.hi, "cad {cad}: {t:?}");
        assert_eq!(v.consistency.unwrap().inconsistent_repetitions, 0);
    }
}

#[test]
fn rd_closed_loop() {
    let v = sim_sweep(he(250, 50), TargetKind::Rd, 2).verdict;
    assert!(v.rd_impl && v.aaaa_first);
    assert!((v.rd_estimate_ms.unwrap() - 50.0).abs() <= 10.0);
}

#[test]
fn no_fallback_has_no_cad() {
    let out = sim_sweep(ClientProfile::NoFallback, TargetKind::Cad, 1);
    assert!(!out.verdict.cad_impl);
    assert_eq!(out.verdict.v4_addrs_used, 0);
    assert!(out.verdict.cad_estimate_ms.is_none());
    // Every point that succeeded did so over IPv6.
    assert!(out.points.iter().filter_map(|p| p.family).all(|f| f == Family::V6));
}

#[test]
fn waits_for_a_is_detected() {
    let w = sim_sweep(ClientProfile::WaitsForA { he: HeConfig::v2() }, TargetKind::RdADelay, 1).verdict;
    assert!(w.waits_for_a);
    let h = sim_sweep(he(250, 50), TargetKind::RdADelay, 1).verdict;
    assert!(!h.waits_for_a);
}

#[test]
fn address_selection_fafc_two() {
    let profile = ClientProfile::HappyEyeballs {
        he: HeConfig::v2().with_first_address_family_count(2).with_interleave(Interleave::Alternate),
    };
    let v = sim_sweep(profile, TargetKind::AddressSelection, 1).verdict;
    assert_eq!((v.v6_addrs_used, v.v4_addrs_used), (10, 10));
    // Two IPv6 first, then alternate until IPv6 runs out.
    let mut expected = vec![Family::V6, Family::V6];
    for _ in 0..8 {
        expected.extend([Family::V4, Family::V6]);
    }
    expected.extend([Family::V4, Family::V4]);
    assert_eq!(v.address_sequence, expected);
}

#[test]
fn nonces_never_repeat_across_a_sweep() {
    let out = sim_sweep(he(250, 50), TargetKind::Cad, 3);
    let nonces: HashSet<_> = out.points.iter().map(|p| p.nonce.clone()).collect();
    assert_eq!(nonces.len(), out.points.len());
}

/// Client whose family per delay comes from a fixed table.
struct TableLab {
    v4_from: Millis,
    /// Delays answered over IPv6 even though they are above `v4_from`.
    flips: HashSet<Millis>,
}

impl Lab for TableLab {
    fn graded(&self, _: TargetKind) -> bool {
        true
    }

    fn run_point(&mut self, _: &TestPlan, delay_ms: Millis, _: &str) -> Result<EventTimeline, RunError> {
        use helab_core::{AttemptId, EventKind, Transport};
        let mut t = EventTimeline::new();
        let family = if delay_ms >= self.v4_from && !self.flips.contains(&delay_ms) { Family::V4 } else { Family::V6 };
        let endpoint = match family {
            Family::V4 => "192.0.2.1:443".parse().unwrap(),
            Family::V6 => "[2001:db8::1]:443".parse().unwrap(),
        };
        t.push(0, EventKind::AttemptStarted { attempt: AttemptId(0), family, endpoint, transport: Transport::Tcp });
        t.push(1, EventKind::AttemptSucceeded { attempt: AttemptId(0) });
        Ok(t)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracle_closure(cad in 100u64..=2000, rd in 10u64..=200) {
        let v = sim_sweep(he(cad, rd), TargetKind::Cad, 1).verdict;
        prop_assert!((v.cad_estimate_ms.unwrap() - cad as f64).abs() <= 5.0);
        let v = sim_sweep(he(250, rd), TargetKind::Rd, 1).verdict;
        prop_assert!((v.rd_estimate_ms.unwrap() - rd as f64).abs() <= 10.0);
    }

    #[test]
    fn ipv4_is_never_followed_by_an_ipv6_verdict(v4_from in 5u64..2100, flips in proptest::collection::hash_set(0u64..2200, 0..6)) {
        let flips: HashSet<Millis> = flips.into_iter().map(|d| d / 5 * 5).collect();
        let plan = TestPlan::simulated(ClientProfile::default(), TargetKind::Cad);
        let mut lab = TableLab { v4_from, flips: flips.clone() };
        let out = sweep(&plan, &mut lab).unwrap();
        let first_v4 = out.points.iter().filter(|p| p.family == Some(Family::V4)).map(|p| p.delay_ms).min();
        match (out.verdict.cad_transition, first_v4) {
            (Some(t), Some(d)) => {
                // The reported switch is the first IPv4 observation.
                prop_assert_eq!(t.hi, d);
                let later_v6 = out.points.iter().any(|p| p.delay_ms > d && p.family == Some(Family::V6));
                prop_assert_eq!(out.verdict.dynamic, later_v6);
            }
            (None, first) => prop_assert!(first.is_none()),
            (Some(_), None) => prop_assert!(false, "transition without IPv4"),
        }
    }
}
