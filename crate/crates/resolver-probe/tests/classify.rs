use helab_core::Family;
use helab_dns::wire::rtype;
use helab_resolver_probe::{classify, AaaaQueryBehavior, ClassifyError, ClassifyOptions, ResolverModel, ResolverTrace};
use proptest::prelude::*;

const PARENT: &str = "res.he-test.example.";

fn tiers(step: u64, max: u64) -> Vec<u64> {
    (0..=max / step).map(|i| i * step).collect()
}

fn verdict(traces: &[ResolverTrace]) -> helab_resolver_probe::ResolverVerdict {
    classify(traces, &ClassifyOptions::default()).unwrap()
}

#[test]
fn bind_like_resolver() {
    let v = verdict(&ResolverModel::bind_like().campaign(&tiers(100, 1000), PARENT));
    assert_eq!(v.aaaa_query_behavior, AaaaQueryBehavior::AaaaAfterA);
    assert_eq!(v.ipv6_share, 1.0);
    assert_eq!(v.resolutions, 11);
    assert_eq!(v.cad_estimate_ms, Some(800.0));
    assert_eq!(v.max_ipv6_delay_used_ms, Some(800));
    assert_eq!(v.ipv6_packets_per_resolution, 1);
    assert!(!v.backoff_detected);
    assert!(!v.parallel);
}

#[test]
fn unbound_like_resolver() {
    let v = verdict(&ResolverModel::unbound_like().campaign(&tiers(100, 1500), PARENT));
    assert_eq!(v.aaaa_query_behavior, AaaaQueryBehavior::AaaaBeforeA);
    assert_eq!(v.ipv6_share, 7.0 / 16.0);
    assert_eq!(v.cad_estimate_ms, Some(376.0));
    assert!(v.backoff_detected);
    assert_eq!(v.ipv6_packets_per_resolution, 2);
    assert!(v.interleaves);
    // Zone 13 falls back at 1506 ms, after its first IPv6 answer at 1302 ms.
    assert_eq!(v.max_ipv6_delay_used_ms, Some(1300));
}

#[test]
fn ipv4_only_resolver() {
    let v = verdict(&ResolverModel::ipv4_only().campaign(&tiers(100, 1000), PARENT));
    assert_eq!(v.aaaa_query_behavior, AaaaQueryBehavior::AaaaAfterV4AuthQuery);
    assert_eq!(v.ipv6_share, 0.0);
    assert_eq!(v.cad_estimate_ms, None);
    assert_eq!(v.max_ipv6_delay_used_ms, None);
    assert_eq!(v.ipv6_packets_per_resolution, 0);
    assert!(!v.parallel);
}

#[test]
fn simultaneous_families_are_parallel_not_a_delay() {
    let traces: Vec<ResolverTrace> = tiers(200, 1000)
        .into_iter()
        .map(|d| {
            let apex = format!("p-d{d}.{PARENT}");
            let www = format!("www.{apex}");
            let mut t = ResolverTrace::new(&apex, d, &[]);
            t.push(10, Family::V6, rtype::A, &www).push(12, Family::V4, rtype::A, &www);
            t
        })
        .collect();
    let v = verdict(&traces);
    assert!(v.parallel);
    assert_eq!(v.cad_estimate_ms, None);
    assert_eq!(v.aaaa_query_behavior, AaaaQueryBehavior::None);
}

#[test]
fn ns_lookup_variants() {
    let ns = "ns-x.res.he-test.example.";
    let apex = "x.res.he-test.example.";
    let www = "www.x.res.he-test.example.";
    let mut only_aaaa = ResolverTrace::new(apex, 0, &[ns.to_string()]);
    only_aaaa.push(0, Family::V4, rtype::AAAA, ns).push(1, Family::V6, rtype::A, www);
    assert_eq!(verdict(&[only_aaaa]).aaaa_query_behavior, AaaaQueryBehavior::EitherNotBoth);

    // Trailing dots and case do not hide an NS lookup.
    let mut upper = ResolverTrace::new(apex, 0, &[ns.to_string()]);
    upper.push(0, Family::V4, rtype::A, "NS-X.res.he-test.example").push(1, Family::V4, rtype::A, www);
    assert_eq!(verdict(&[upper]).aaaa_query_behavior, AaaaQueryBehavior::AaaaAfterV4AuthQuery);
}

#[test]
fn nothing_to_classify() {
    let empty = ResolverTrace::new("e.res.he-test.example.", 0, &[]);
    assert_eq!(classify(&[empty], &ClassifyOptions::default()), Err(ClassifyError::Unclassifiable));
    assert_eq!(classify(&[], &ClassifyOptions::default()), Err(ClassifyError::Unclassifiable));
}

#[test]
fn steady_retries_are_not_backoff() {
    let apex = "r.res.he-test.example.";
    let www = "www.r.res.he-test.example.";
    let mut t = ResolverTrace::new(apex, 5000, &[]);
    t.push(0, Family::V6, rtype::A, www).push(400, Family::V6, rtype::A, www).push(800, Family::V6, rtype::A, www);
    let v = verdict(&[t]);
    assert!(!v.backoff_detected);
    assert!(!v.interleaves);
    assert_eq!(v.ipv6_packets_per_resolution, 3);
    assert_eq!(v.cad_estimate_ms, Some(400.0));
    // Never asked over IPv4, so the held answer was used.
    assert_eq!(v.max_ipv6_delay_used_ms, Some(5000));
}

fn arb_trace() -> impl Strategy<Value = ResolverTrace> {
    let event = (0u64..3000, any::<bool>(), prop_oneof![Just(rtype::A), Just(rtype::AAAA)], any::<bool>());
    (0u64..2000, 0usize..1000, proptest::collection::vec(event, 0..8)).prop_map(|(delay, tag, events)| {
        let apex = format!("z{tag}.{PARENT}");
        let ns = format!("ns-z{tag}.{PARENT}");
        let www = format!("www.{apex}");
        let mut t = ResolverTrace::new(&apex, delay, std::slice::from_ref(&ns));
        for (at, v6, qtype, ns_lookup) in events {
            let family = if v6 { Family::V6 } else { Family::V4 };
            t.push(at, family, qtype, if ns_lookup { &ns } else { &www });
        }
        t
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn verdict_ignores_trace_order(traces in proptest::collection::vec(arb_trace(), 1..12), seed in any::<u64>()) {
        let mut shuffled = traces.clone();
        let mut state = seed;
        for i in (1..shuffled.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (state >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(
            classify(&traces, &ClassifyOptions::default()),
            classify(&shuffled, &ClassifyOptions::default())
        );
    }

    #[test]
    fn share_matches_recount(traces in proptest::collection::vec(arb_trace(), 1..12)) {
        let mut firsts = Vec::new();
        for t in &traces {
            let ns: Vec<String> = t.ns_names.iter().map(|n| n.to_ascii_lowercase()).collect();
            let mut auth: Vec<_> = t.events.iter().filter(|e| !ns.contains(&e.qname.to_ascii_lowercase())).collect();
            auth.sort_by_key(|e| e.at_ms);
            if let Some(e) = auth.first() {
                firsts.push(e.family == Family::V6);
            }
        }
        match classify(&traces, &ClassifyOptions::default()) {
            Ok(v) => {
                prop_assert_eq!(v.resolutions, firsts.len());
                let expected = firsts.iter().filter(|&&f| f).count() as f64 / firsts.len() as f64;
                prop_assert!((v.ipv6_share - expected).abs() < 1e-12);
                prop_assert!(v.ipv6_share == 0.0 || v.ipv6_packets_per_resolution >= 1);
            }
            Err(_) => prop_assert!(firsts.is_empty()),
        }
    }

    #[test]
    fn no_cad_without_an_ipv6_first_query(traces in proptest::collection::vec(arb_trace(), 1..12)) {
        let v4_first: Vec<ResolverTrace> = traces
            .into_iter()
            .map(|mut t| {
                let www = format!("www.{}", t.apex);
                t.push(0, Family::V4, rtype::A, &www);
                t.events.sort_by_key(|e| (e.at_ms, e.family == Family::V6));
                t
            })
            .collect();
        let v = classify(&v4_first, &ClassifyOptions::default()).unwrap();
        prop_assert_eq!(v.ipv6_share, 0.0);
        prop_assert_eq!(v.cad_estimate_ms, None);
    }
}
