//! One PASS/FAIL line per acceptance criterion, with its time budget.

use std::collections::{BTreeMap, BTreeSet};
use std::net::{Ipv4Addr, Ipv6Addr, SocketAddr};
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use hickory_proto::op::{Message as HMessage, MessageType};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use helab_core::he::{self, drive, sort_and_interlace, Destination, EndpointCandidate, HeConfig, Interleave, Version};
use helab_core::simnet::{run, ConnectBehavior, DnsDelay, Scenario};
use helab_core::{Family, Millis, RecordType};
use helab_dns::wire::{rtype, Message, Name};
use helab_dns::{QueryContext, QueryLog, Server, ServerConfig, UdpServer};
use helab_labd::{consistency_score, infer_cad_interval, TierObservation, DEFAULT_DELAYS};
use helab_probe::demo::DemoClientConfig;
use helab_probe::{sweep, ClientProfile, DelayGrid, RealLab, SimLab, TargetKind, TestPlan};
use helab_resolver_probe::{classify, AaaaQueryBehavior, ClassifyOptions, ResolverModel};

type Check = Result<String, String>;

/// Name, time budget in seconds, check.
type Criterion = (&'static str, u64, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn v6(i: u16) -> Ipv6Addr {
    Ipv6Addr::new(0x2001, 0xdb8, 0, 0, 0, 0, 0, i)
}

fn v4(i: u8) -> Ipv4Addr {
    Ipv4Addr::new(192, 0, 2, i)
}

fn table_defaults() -> Check {
    for version in [Version::V1, Version::V2, Version::V3] {
        let c = HeConfig::for_version(version);
        let got = (c.connection_attempt_delay, c.resolution_delay, c.cad_min, c.cad_recommended_min, c.cad_max, c.result_cache_ttl_secs);
        ensure(got == (250, 50, 10, 100, 2000, 600), || format!("{version:?}: {got:?}"))?;
    }
    ensure(he::DEFAULT_FIRST_ADDRESS_FAMILY_COUNT == 1, || "FAFC".into())?;
    Ok("CAD 250, RD 50, 10/100/2000, 600 s for v1..v3".into())
}

fn rd_law() -> Check {
    let dest = Destination::new("rd.example.test", 443);
    let config = HeConfig::v2();
    let first = |aaaa: DnsDelay, a: Millis| {
        let s = Scenario::new()
            .with_aaaa([v6(1)])
            .with_a([v4(1)])
            .with_dns_delay(RecordType::Aaaa, aaaa)
            .with_dns_delay(RecordType::A, DnsDelay::After(a))
            .with_connect(SocketAddr::new(v6(1).into(), 443), ConnectBehavior::Blackhole)
            .with_connect(SocketAddr::new(v4(1).into(), 443), ConnectBehavior::Blackhole);
        let r = run(&s, |w| drive(w, &dest, &config)).map_err(|e| format!("{e:?}"))?;
        let t = r.output.err().and_then(|e| e.timeline().cloned()).ok_or("expected every attempt to fail")?;
        let (at, _, family, _) = t.attempts().next().ok_or("no attempt")?;
        Ok::<_, String>((at, family))
    };
    let grid: Vec<Millis> = (0..=50).map(|i| i * 10).collect();
    let mut cases = 0;
    for &aaaa in &grid {
        for &a in &grid {
            let want = if aaaa <= a + 50 { (aaaa, Family::V6) } else { (a + 50, Family::V4) };
            let got = first(DnsDelay::After(aaaa), a)?;
            ensure(got == want, || format!("aaaa {aaaa} a {a}: {got:?} != {want:?}"))?;
            cases += 1;
        }
    }
    for &a in &grid {
        let got = first(DnsDelay::Drop, a)?;
        ensure(got == (a + 50, Family::V4), || format!("AAAA lost, a {a}: {got:?}"))?;
        cases += 1;
    }
    Ok(format!("{cases} grid points"))
}

/// Same multiset, FAFC preferred entries first, then strict alternation
/// while both families remain, order kept within a family.
fn interlace_ok(input: &[EndpointCandidate], output: &[EndpointCandidate], fafc: usize) -> bool {
    let pref = |c: &EndpointCandidate| c.family() == Family::V6;
    let (in_p, in_o): (Vec<_>, Vec<_>) = input.iter().cloned().partition(pref);
    let (out_p, out_o): (Vec<_>, Vec<_>) = output.iter().cloned().partition(pref);
    if in_p != out_p || in_o != out_o {
        return false;
    }
    let head = fafc.min(in_p.len());
    if !output[..head].iter().all(pref) {
        return false;
    }
    let (mut left_p, mut left_o) = (in_p.len() - head, in_o.len());
    let mut want_other = true;
    for c in &output[head..] {
        if left_p > 0 && left_o > 0 && pref(c) == want_other {
            return false;
        }
        if pref(c) {
            left_p -= 1;
        } else {
            left_o -= 1;
        }
        want_other = pref(c);
    }
    true
}

fn interlace() -> Check {
    let mut rng = StdRng::seed_from_u64(0x1a7e);
    for case in 0..1000 {
        let (n6, n4) = (rng.gen_range(0..=20u16), rng.gen_range(0..=20u8));
        let mut input: Vec<EndpointCandidate> = (1..=n6)
            .map(|i| EndpointCandidate::tcp(v6(i).into(), 443))
            .chain((1..=n4).map(|i| EndpointCandidate::tcp(v4(i).into(), 443)))
            .collect();
        if input.is_empty() {
            input.push(EndpointCandidate::tcp(v4(1).into(), 443));
        }
        for i in (1..input.len()).rev() {
            input.swap(i, rng.gen_range(0..=i));
        }
        let fafc = rng.gen_range(1..=2u32);
        let config = HeConfig::v2().with_first_address_family_count(fafc).with_interleave(Interleave::Alternate);
        let output = sort_and_interlace(&input, &config).map_err(|e| format!("case {case}: {e}"))?;
        ensure(interlace_ok(&input, &output, fafc as usize), || format!("case {case}: {n6}+{n4}, fafc {fafc}"))?;
    }
    Ok("1000 cases".into())
}

fn sim_sweep(profile: ClientProfile, kind: TargetKind, reps: u32) -> Result<helab_probe::SweepOutcome, String> {
    let mut plan = TestPlan::simulated(profile, kind);
    plan.repetitions = reps;
    let mut lab = SimLab::from_plan(&plan).ok_or("not a simulated plan")?;
    sweep(&plan, &mut lab).map_err(|e| e.to_string())
}

fn closed_loop_sim() -> Check {
    let mut found = Vec::new();
    for cad in [200, 250, 300, 2000] {
        let profile = ClientProfile::HappyEyeballs { he: HeConfig::v2().with_cad(cad) };
        let v = sim_sweep(profile, TargetKind::Cad, 1)?.verdict;
        let est = v.cad_estimate_ms.ok_or_else(|| format!("cad {cad}: no estimate"))?;
        ensure(v.cad_impl && (est - cad as f64).abs() <= 5.0, || format!("cad {cad}: estimate {est}"))?;
        found.push(format!("{cad}->{est}"));
    }
    Ok(found.join(" "))
}

fn write_config(dir: &Path, name: &str, config: &DemoClientConfig) -> String {
    let path = dir.join(name);
    std::fs::write(&path, toml::to_string(config).unwrap()).unwrap();
    path.display().to_string()
}

fn real_sweep(config: &str, kind: TargetKind, grid: DelayGrid, reps: u32) -> Result<helab_probe::SweepOutcome, String> {
    let template = format!("{} demo-client --config {config} --dns {{dns}} '{{url}}'", env!("CARGO_BIN_EXE_probe"));
    let mut plan = TestPlan::command(template, kind);
    plan.delay_grid = grid;
    plan.repetitions = reps;
    let mut lab = RealLab::from_plan(&plan).map_err(|e| e.to_string())?.ok_or("not a command plan")?;
    sweep(&plan, &mut lab).map_err(|e| e.to_string())
}

fn closed_loop_real() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let he = write_config(dir.path(), "he.toml", &DemoClientConfig::default());
    let grid = DelayGrid { coarse_start: 0, coarse_end: 200, coarse_step: 50, fine_window: 50, fine_step: 10 };
    let v = real_sweep(&he, TargetKind::Rd, grid, 3)?.verdict;
    let rd = v.rd_estimate_ms.ok_or("no RD estimate")?;
    ensure(v.rd_impl && (rd - 50.0).abs() <= 10.0, || format!("RD estimate {rd}"))?;

    let wget = DemoClientConfig { profile: ClientProfile::NoFallback, connect_timeout_ms: 500, ..DemoClientConfig::default() };
    let wget = write_config(dir.path(), "wget.toml", &wget);
    let grid = DelayGrid { coarse_start: 0, coarse_end: 200, coarse_step: 100, ..DelayGrid::default() };
    let v = real_sweep(&wget, TargetKind::Cad, grid, 1)?.verdict;
    ensure(!v.cad_impl, || "no-fallback client reported a CAD".into())?;
    Ok(format!("RD {rd} ms; no-fallback cad_impl=false"))
}

fn address_selection() -> Check {
    let profile = ClientProfile::HappyEyeballs {
        he: HeConfig::v2().with_first_address_family_count(2).with_interleave(Interleave::Alternate),
    };
    let v = sim_sweep(profile, TargetKind::AddressSelection, 1)?.verdict;
    let mut expected = vec![Family::V6, Family::V6];
    for _ in 0..8 {
        expected.extend([Family::V4, Family::V6]);
    }
    expected.extend([Family::V4, Family::V4]);
    ensure(v.address_sequence == expected, || format!("{:?}", v.address_sequence))?;
    ensure((v.v6_addrs_used, v.v4_addrs_used) == (10, 10), || format!("{} / {}", v.v6_addrs_used, v.v4_addrs_used))?;
    Ok("v6,v6,(v4,v6)x8,v4,v4; counts (10,10)".into())
}

fn dns_wire() -> Check {
    let server = Server::new(&ServerConfig::default()).map_err(|e| e.to_string())?;
    let ctx = QueryContext { source: "[::1]:53000".parse().unwrap(), received_at: 0 };
    let mut rng = StdRng::seed_from_u64(0xd05);
    let qtypes = [rtype::A, rtype::AAAA, rtype::NS, rtype::SOA, rtype::HTTPS];
    for case in 0..1000 {
        let id: u16 = rng.gen();
        let delay = rng.gen_range(0..5000u64);
        let target = ["a", "aaaa", "https", "none"][rng.gen_range(0..4)];
        let nonce: String = (0..rng.gen_range(1..20)).map(|_| rng.gen_range(b'a'..=b'z') as char).collect();
        let name = format!("d{delay}-{target}-{nonce}.he-test.example.");
        let qtype = qtypes[rng.gen_range(0..qtypes.len())];
        let query = Message::query(id, Name::parse(&name).map_err(|e| e.to_string())?, qtype).encode();
        let served = server.serve(&query, &ctx).ok_or_else(|| format!("case {case}: no response"))?;
        let resp = HMessage::from_vec(&served.response).map_err(|e| format!("case {case}: {e}"))?;
        let q = resp.queries.first().ok_or_else(|| format!("case {case}: no question"))?;
        ensure(
            resp.metadata.id == id
                && resp.metadata.message_type == MessageType::Response
                && u16::from(q.query_type()) == qtype
                && q.name().to_ascii().eq_ignore_ascii_case(&name),
            || format!("case {case}: {name} {qtype}"),
        )?;
    }

    let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build().map_err(|e| e.to_string())?;
    let worst = rt.block_on(async {
        let addrs: [SocketAddr; 1] = ["127.0.0.1:0".parse().unwrap()];
        let udp = UdpServer::bind(&addrs, Arc::new(server), Instant::now(), QueryLog::in_memory())
            .await
            .map_err(|e| e.to_string())?;
        let addr = udp.local_addrs()[0];
        let mut tasks = Vec::new();
        for delay in [50u64, 250, 800] {
            for i in 0..20 {
                tasks.push(tokio::spawn(async move {
                    let socket = tokio::net::UdpSocket::bind("127.0.0.1:0").await.unwrap();
                    let name = format!("d{delay}-a-acc{i}.he-test.example.");
                    let q = Message::query(i, Name::parse(&name).unwrap(), rtype::A).encode();
                    let sent = Instant::now();
                    socket.send_to(&q, addr).await.unwrap();
                    let mut buf = [0u8; 1500];
                    tokio::time::timeout(Duration::from_secs(3), socket.recv_from(&mut buf)).await.ok()?.ok()?;
                    Some((delay, sent.elapsed()))
                }));
            }
        }
        let mut worst = Duration::ZERO;
        for t in tasks {
            let (delay, rtt) = t.await.unwrap().ok_or("answer lost")?;
            let late = rtt.checked_sub(Duration::from_millis(delay)).ok_or_else(|| format!("{delay} ms answered after {rtt:?}"))?;
            ensure(late < Duration::from_millis(10), || format!("{delay} ms answered after {rtt:?}"))?;
            worst = worst.max(late);
        }
        Ok::<_, String>(worst)
    })?;
    Ok(format!("1000 fuzzed queries; 60 held answers, worst +{:.1} ms", worst.as_secs_f64() * 1000.0))
}

fn resolver_classification() -> Check {
    let parent = "res.he-test.example.";
    let opts = ClassifyOptions::default();
    let tiers = |max: u64| (0..=max / 100).map(|i| i * 100).collect::<Vec<_>>();

    let bind = classify(&ResolverModel::bind_like().campaign(&tiers(1000), parent), &opts).map_err(|e| e.to_string())?;
    ensure(
        bind.aaaa_query_behavior == AaaaQueryBehavior::AaaaAfterA && bind.ipv6_share == 1.0 && bind.cad_estimate_ms == Some(800.0),
        || format!("BIND-like: {bind:?}"),
    )?;
    let unbound = classify(&ResolverModel::unbound_like().campaign(&tiers(1500), parent), &opts).map_err(|e| e.to_string())?;
    ensure(
        unbound.backoff_detected && unbound.cad_estimate_ms == Some(376.0) && unbound.ipv6_packets_per_resolution == 2,
        || format!("Unbound-like: {unbound:?}"),
    )?;
    let google = classify(&ResolverModel::ipv4_only().campaign(&tiers(1000), parent), &opts).map_err(|e| e.to_string())?;
    ensure(google.ipv6_share == 0.0 && google.cad_estimate_ms.is_none(), || format!("IPv4-only: {google:?}"))?;
    Ok(format!(
        "BIND-like share {} cad 800; Unbound-like share {:.3} cad 376 backoff; IPv4-only share 0",
        bind.ipv6_share, unbound.ipv6_share
    ))
}

fn labd_inference() -> Check {
    let worked: Vec<TierObservation> = DEFAULT_DELAYS
        .iter()
        .map(|&d| TierObservation { delay_ms: d, repetition: 0, family: if d <= 200 { Family::V6 } else { Family::V4 } })
        .collect();
    let i = infer_cad_interval(&worked).map_err(|e| e.to_string())?;
    ensure(i.to_string() == "(200, 250]" && !i.inconsistent, || format!("worked example gave {i}"))?;

    let mut rng = StdRng::seed_from_u64(0x1abd);
    for case in 0..500 {
        let reps = rng.gen_range(1..6u32);
        let tiers: BTreeSet<Millis> = (0..rng.gen_range(2..12)).map(|_| rng.gen_range(0..60u64) * 50).collect();
        let obs: Vec<TierObservation> = (0..reps)
            .flat_map(|r| tiers.iter().map(move |&d| (r, d)))
            .map(|(r, d)| TierObservation { delay_ms: d, repetition: r, family: if rng.gen_bool(0.5) { Family::V6 } else { Family::V4 } })
            .collect();

        // Majorities, ties to IPv6.
        let mut votes: BTreeMap<Millis, (u32, u32)> = BTreeMap::new();
        for o in &obs {
            let v = votes.entry(o.delay_ms).or_default();
            if o.family == Family::V6 { v.0 += 1 } else { v.1 += 1 }
        }
        let lo = votes.iter().filter(|(_, v)| v.0 >= v.1).map(|(d, _)| *d).max();
        let hi = votes.iter().filter(|(d, v)| v.0 < v.1 && lo.is_none_or(|lo| **d > lo)).map(|(d, _)| *d).min();
        if tiers.len() >= 2 {
            let got = infer_cad_interval(&obs).map_err(|e| e.to_string())?;
            ensure((got.lo, got.hi) == (lo, hi), || format!("case {case}: {got} vs ({lo:?}, {hi:?}]"))?;
        }

        // A repetition violates at d2 when it used IPv4 at a smaller d1.
        let mut per_tier: BTreeMap<Millis, u32> = BTreeMap::new();
        let mut bad = BTreeSet::new();
        for x in &obs {
            let violates = x.family == Family::V6
                && obs.iter().any(|y| y.repetition == x.repetition && y.delay_ms < x.delay_ms && y.family == Family::V4);
            if violates {
                *per_tier.entry(x.delay_ms).or_default() += 1;
                bad.insert(x.repetition);
            }
        }
        let s = consistency_score(&obs);
        ensure(s.inconsistent_repetitions == bad.len() as u32, || format!("case {case}: repetitions"))?;
        for t in &s.tiers {
            let want = per_tier.get(&t.delay_ms).copied().unwrap_or(0);
            ensure(t.violations == want, || format!("case {case}: tier {} {} != {want}", t.delay_ms, t.violations))?;
        }
    }
    Ok("worked example (200, 250]; 500 random grids recounted".into())
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("HE defaults table", 1, table_defaults),
        ("resolution delay law", 10, rd_law),
        ("interlace conformance", 10, interlace),
        ("closed loop, simnet CAD", 60, closed_loop_sim),
        ("closed loop, real sockets", 120, closed_loop_real),
        ("address selection FAFC 2", 30, address_selection),
        ("DNS wire conformance and delay accuracy", 60, dns_wire),
        ("resolver classification", 10, resolver_classification),
        ("labd inference", 10, labd_inference),
    ];
    let mut failed = 0;
    for (name, budget_s, check) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = match result {
            Ok(detail) if elapsed > Duration::from_secs(budget_s) => Err(format!("{detail}; over the {budget_s} s budget")),
            r => r,
        };
        match result {
            Ok(detail) => println!("PASS  {name}: {detail} ({:.2} s)", elapsed.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} ({:.2} s)", elapsed.as_secs_f64());
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
