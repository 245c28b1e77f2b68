use std::collections::{BTreeMap, BTreeSet, HashSet};

use helab_core::{EventKind, EventTimeline, Family, Millis, RecordType};
use helab_labd::{consistency_score, CadInterval, ConsistencyScore, TierObservation};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lab::{attempted_endpoints, Lab, RunError};
use crate::plan::{PlanError, TargetKind, TestPlan};

/// How close the IPv6 start must come to the A answer to count as waiting
/// for it.
const WAIT_FOR_A_SLACK_MS: Millis = 10;
/// Smallest A delay that can tell a waiting client apart.
const WAIT_FOR_A_MIN_DELAY_MS: Millis = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum InferError {
    #[error("timeline lacks an attempt of both families")]
    NotInferable,
}

/// First IPv4 attempt minus first IPv6 attempt.
pub fn infer_cad_from_timeline(timeline: &EventTimeline) -> Result<Millis, InferError> {
    match (timeline.first_attempt(Family::V6), timeline.first_attempt(Family::V4)) {
        (Some(v6), Some(v4)) if v4 >= v6 => Ok(v4 - v6),
        _ => Err(InferError::NotInferable),
    }
}

/// Family of the first successful attempt.
pub fn winner_family(timeline: &EventTimeline) -> Option<Family> {
    let (_, _, family) = timeline.first_success()?;
    Some(family)
}

fn first_answer(timeline: &EventTimeline, record: RecordType) -> Option<Millis> {
    timeline.iter().find_map(|e| match &e.kind {
        EventKind::DnsAnswer { record: r, .. } if *r == record => Some(e.at),
        _ => None,
    })
}

fn aaaa_queried_first(timeline: &EventTimeline) -> Option<bool> {
    timeline.iter().find_map(|e| match &e.kind {
        EventKind::DnsQuery { record: RecordType::Aaaa, .. } => Some(true),
        EventKind::DnsQuery { record: RecordType::A, .. } => Some(false),
        _ => None,
    })
}

/// IPv4 launch relative to the IPv6 launch, or to the AAAA answer when the
/// IPv6 attempt is invisible (a blackholed handshake never reaches the
/// server's accept log).
fn cad_gap(timeline: &EventTimeline) -> Option<Millis> {
    if let Ok(gap) = infer_cad_from_timeline(timeline) {
        return Some(gap);
    }
    let v4 = timeline.first_attempt(Family::V4)?;
    if timeline.first_attempt(Family::V6).is_some() {
        return None;
    }
    v4.checked_sub(first_answer(timeline, RecordType::Aaaa)?)
}

fn rd_gap(timeline: &EventTimeline) -> Option<Millis> {
    timeline.first_attempt(Family::V4)?.checked_sub(first_answer(timeline, RecordType::A)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub median_ms: f64,
    pub mean_ms: f64,
    pub sd_ms: f64,
    pub samples: usize,
    /// Samples more than one standard deviation from the mean.
    pub outliers: usize,
}

impl Estimate {
    pub fn from_samples(samples: &[Millis]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut v: Vec<f64> = samples.iter().map(|&s| s as f64).collect();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 };
        let mean = v.iter().sum::<f64>() / n as f64;
        let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        let outliers = v.iter().filter(|&&x| (x - mean).abs() > sd && sd > 0.0).count();
        Some(Self { median_ms: median, mean_ms: mean, sd_ms: sd, samples: n, outliers })
    }
}

/// `(lo, hi]`: last delay served over IPv6 and first served over IPv4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub lo: Millis,
    pub hi: Millis,
}

/// One row of the feature matrix.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub measured: BTreeSet<TargetKind>,
    pub prefers_ipv6: bool,
    pub cad_impl: bool,
    pub cad_estimate_ms: Option<f64>,
    /// Only from web tier measurements.
    pub cad_interval: Option<CadInterval>,
    pub cad_transition: Option<Transition>,
    pub cad_stats: Option<Estimate>,
    pub aaaa_first: bool,
    pub rd_impl: bool,
    pub rd_estimate_ms: Option<f64>,
    pub rd_transition: Option<Transition>,
    pub rd_stats: Option<Estimate>,
    pub waits_for_a: bool,
    pub v4_addrs_used: usize,
    pub v6_addrs_used: usize,
    pub address_sequence: Vec<Family>,
    pub consistency: Option<ConsistencyScore>,
    /// The fine pass did not find a single stable switch point.
    pub dynamic: bool,
}

impl Verdict {
    /// Combines verdicts of different plans for one client; fields owned by
    /// a target kind come from the verdict that measured it.
    pub fn merge(mut self, other: Verdict) -> Verdict {
        for kind in &other.measured {
            match kind {
                TargetKind::Cad => {
                    self.prefers_ipv6 = other.prefers_ipv6;
                    self.cad_impl = other.cad_impl;
                    self.cad_estimate_ms = other.cad_estimate_ms;
                    self.cad_interval = other.cad_interval;
                    self.cad_transition = other.cad_transition;
                    self.cad_stats = other.cad_stats;
                    self.consistency = other.consistency.clone();
                    self.dynamic |= other.dynamic;
                }
                TargetKind::Rd => {
                    self.rd_impl = other.rd_impl;
                    self.rd_estimate_ms = other.rd_estimate_ms;
                    self.rd_transition = other.rd_transition;
                    self.rd_stats = other.rd_stats;
                    self.aaaa_first = other.aaaa_first;
                    self.dynamic |= other.dynamic;
                }
                TargetKind::RdADelay => self.waits_for_a = other.waits_for_a,
                TargetKind::AddressSelection => {
                    self.v4_addrs_used = other.v4_addrs_used;
                    self.v6_addrs_used = other.v6_addrs_used;
                    self.address_sequence = other.address_sequence.clone();
                }
            }
        }
        if self.measured.is_empty() {
            self.aaaa_first = other.aaaa_first;
            self.v4_addrs_used = other.v4_addrs_used;
            self.v6_addrs_used = other.v6_addrs_used;
        }
        self.measured.extend(other.measured);
        self
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointResult {
    pub delay_ms: Millis,
    pub repetition: u32,
    pub nonce: String,
    pub family: Option<Family>,
    pub failed: bool,
    pub timeline: EventTimeline,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub verdict: Verdict,
    pub points: Vec<PointResult>,
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Run(#[from] RunError),
}

/// Fresh lowercase nonces; never repeats within one source.
#[derive(Debug)]
pub struct NonceSource {
    rng: StdRng,
    issued: HashSet<String>,
}

impl NonceSource {
    pub fn new(seed: u64) -> Self {
        Self { rng: StdRng::seed_from_u64(seed), issued: HashSet::new() }
    }

    pub fn next_nonce(&mut self) -> String {
        const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";
        loop {
            let n: String = (0..12).map(|_| ALPHABET[self.rng.gen_range(0..ALPHABET.len())] as char).collect();
            if self.issued.insert(n.clone()) {
                return n;
            }
        }
    }
}

struct Runner<'a> {
    plan: &'a TestPlan,
    lab: &'a mut dyn Lab,
    nonces: NonceSource,
    points: Vec<PointResult>,
}

impl Runner<'_> {
    /// Grid points run one after another, repetitions too.
    fn measure(&mut self, delays: &[Millis]) -> Result<(), RunError> {
        for &delay_ms in delays {
            for repetition in 0..self.plan.repetitions {
                let nonce = self.nonces.next_nonce();
                let (timeline, failed) = match self.lab.run_point(self.plan, delay_ms, &nonce) {
                    Ok(t) => (t, false),
                    Err(RunError::ClientFailed { timeline, .. }) => (timeline, true),
                    Err(RunError::NoActivity) => (EventTimeline::new(), true),
                    Err(e) => return Err(e),
                };
                let family = winner_family(&timeline);
                self.points.push(PointResult { delay_ms, repetition, nonce, family, failed, timeline });
            }
        }
        Ok(())
    }
}

/// Majority family per delay over successful repetitions; a tie counts as
/// IPv6.
fn majorities(points: &[PointResult]) -> BTreeMap<Millis, Option<Family>> {
    let mut counts: BTreeMap<Millis, (u32, u32)> = BTreeMap::new();
    for p in points {
        let c = counts.entry(p.delay_ms).or_default();
        match p.family {
            Some(Family::V4) => c.0 += 1,
            Some(Family::V6) => c.1 += 1,
            None => {}
        }
    }
    counts
        .into_iter()
        .map(|(d, (v4, v6))| {
            let f = match (v4, v6) {
                (0, 0) => None,
                (v4, v6) if v4 > v6 => Some(Family::V4),
                _ => Some(Family::V6),
            };
            (d, f)
        })
        .collect()
}

struct Switch {
    transition: Option<Transition>,
    prefers_ipv6: bool,
    dynamic: bool,
}

/// Coarse pass, then (when the lab can grade delays) a fine pass around the
/// first coarse IPv4 point.
fn find_switch(runner: &mut Runner<'_>, graded: bool) -> Result<Switch, RunError> {
    let grid = runner.plan.delay_grid.clone();
    runner.measure(&grid.coarse())?;
    let coarse = majorities(&runner.points);
    let prefers_ipv6 = coarse.values().next().copied().flatten() == Some(Family::V6);
    let first_v4 = coarse.iter().find(|(_, f)| **f == Some(Family::V4)).map(|(&d, _)| d);
    let Some(t) = first_v4.filter(|_| prefers_ipv6) else {
        return Ok(Switch { transition: None, prefers_ipv6, dynamic: false });
    };
    if graded {
        runner.measure(&grid.fine_around(t))?;
    }
    let all = majorities(&runner.points);
    let hi = all.iter().find(|(_, f)| **f == Some(Family::V4)).map(|(&d, _)| d).expect("t is IPv4");
    let lo = all
        .range(..hi)
        .rev()
        .find(|(_, f)| **f == Some(Family::V6))
        .map_or(hi, |(&d, _)| d);
    let flips_back = all.range(hi..).any(|(_, f)| *f == Some(Family::V6));
    let window = grid.fine_around(t);
    let mixed = window.iter().any(|d| {
        let fams: BTreeSet<_> = runner.points.iter().filter(|p| p.delay_ms == *d).filter_map(|p| p.family).collect();
        fams.len() > 1
    });
    Ok(Switch { transition: Some(Transition { lo, hi }), prefers_ipv6, dynamic: flips_back || mixed })
}

fn estimate(points: &[PointResult], from: Millis, gap: fn(&EventTimeline) -> Option<Millis>) -> Option<Estimate> {
    let samples: Vec<Millis> = points
        .iter()
        .filter(|p| p.delay_ms >= from && p.family == Some(Family::V4))
        .filter_map(|p| gap(&p.timeline))
        .collect();
    Estimate::from_samples(&samples)
}

fn fill_common(verdict: &mut Verdict, points: &[PointResult]) {
    let firsts: Vec<bool> = points.iter().filter_map(|p| aaaa_queried_first(&p.timeline)).collect();
    verdict.aaaa_first = !firsts.is_empty() && firsts.iter().filter(|&&b| b).count() * 2 > firsts.len();
    let mut v4 = BTreeSet::new();
    let mut v6 = BTreeSet::new();
    for p in points {
        let (a, b) = attempted_endpoints(&p.timeline);
        v4.extend(a);
        v6.extend(b);
    }
    verdict.v4_addrs_used = v4.len();
    verdict.v6_addrs_used = v6.len();
}

fn observations(points: &[PointResult]) -> Vec<TierObservation> {
    points
        .iter()
        .filter_map(|p| Some(TierObservation { delay_ms: p.delay_ms, repetition: p.repetition, family: p.family? }))
        .collect()
}

/// Runs the plan against `lab` and derives the verdict for its target.
pub fn sweep(plan: &TestPlan, lab: &mut dyn Lab) -> Result<SweepOutcome, SweepError> {
    plan.validate()?;
    let graded = lab.graded(plan.target_kind);
    let mut runner = Runner { plan, lab, nonces: NonceSource::new(plan.seed), points: Vec::new() };
    let mut verdict = Verdict { measured: BTreeSet::from([plan.target_kind]), ..Verdict::default() };
    match plan.target_kind {
        TargetKind::Cad => {
            let switch = find_switch(&mut runner, graded)?;
            fill_common(&mut verdict, &runner.points);
            verdict.prefers_ipv6 = switch.prefers_ipv6;
            verdict.dynamic = switch.dynamic;
            verdict.cad_transition = switch.transition;
            if let Some(t) = switch.transition {
                verdict.cad_stats = estimate(&runner.points, t.hi, cad_gap);
                verdict.cad_estimate_ms = verdict.cad_stats.map(|s| s.median_ms);
                verdict.cad_impl = verdict.cad_estimate_ms.is_some();
            }
            verdict.consistency = Some(consistency_score(&observations(&runner.points)));
        }
        TargetKind::Rd => {
            let switch = find_switch(&mut runner, graded)?;
            fill_common(&mut verdict, &runner.points);
            verdict.prefers_ipv6 = switch.prefers_ipv6;
            verdict.dynamic = switch.dynamic;
            verdict.rd_transition = switch.transition;
            if let Some(t) = switch.transition {
                verdict.rd_stats = estimate(&runner.points, t.hi, rd_gap);
                verdict.rd_estimate_ms = verdict.rd_stats.map(|s| s.median_ms);
                verdict.rd_impl = verdict.rd_estimate_ms.is_some();
            }
        }
        TargetKind::RdADelay => {
            runner.measure(&plan.delay_grid.coarse())?;
            fill_common(&mut verdict, &runner.points);
            let judged: Vec<bool> = runner
                .points
                .iter()
                .filter(|p| p.delay_ms >= WAIT_FOR_A_MIN_DELAY_MS)
                .filter_map(|p| {
                    let v6 = p.timeline.first_attempt(Family::V6)?;
                    let a = first_answer(&p.timeline, RecordType::A)?;
                    Some(v6 + WAIT_FOR_A_SLACK_MS >= a)
                })
                .collect();
            verdict.waits_for_a = !judged.is_empty() && judged.iter().filter(|&&w| w).count() * 2 > judged.len();
        }
        TargetKind::AddressSelection => {
            runner.measure(&[0])?;
            fill_common(&mut verdict, &runner.points);
            if let Some(first) = runner.points.first() {
                verdict.address_sequence = first.timeline.attempts().map(|(_, _, f, _)| f).collect();
            }
        }
    }
    Ok(SweepOutcome { verdict, points: runner.points })
}
