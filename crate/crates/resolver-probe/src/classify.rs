use std::collections::{BTreeMap, HashMap};

use helab_core::{Family, Millis};
use helab_dns::wire::rtype;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::{normalize, ResolverTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AaaaQueryBehavior {
    /// AAAA for the NS name before A.
    AaaaBeforeA,
    AaaaAfterA,
    /// AAAA only after the first query to the IPv4 server, or never.
    AaaaAfterV4AuthQuery,
    EitherNotBoth,
    /// No NS-name lookups at all.
    None,
}

impl AaaaQueryBehavior {
    pub fn glyph(self) -> &'static str {
        match self {
            AaaaQueryBehavior::AaaaBeforeA => "●",
            AaaaQueryBehavior::AaaaAfterA => "◐",
            AaaaQueryBehavior::AaaaAfterV4AuthQuery => "◑",
            AaaaQueryBehavior::EitherNotBoth => "◓",
            AaaaQueryBehavior::None => "-",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifyOptions {
    /// A retry gap this much larger than the previous one counts as backoff.
    pub backoff_ratio: f64,
    /// First IPv6 and IPv4 queries this close together count as parallel.
    pub parallel_window_ms: Millis,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { backoff_ratio: 1.5, parallel_window_ms: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolverVerdict {
    pub aaaa_query_behavior: AaaaQueryBehavior,
    /// Resolutions whose first authoritative query used IPv6.
    pub ipv6_share: f64,
    pub resolutions: usize,
    /// Highest zone delay still answered over IPv6 before any IPv4 query.
    pub max_ipv6_delay_used_ms: Option<Millis>,
    /// Most IPv6 queries sent before the first IPv4 one.
    pub ipv6_packets_per_resolution: u32,
    pub interleaves: bool,
    /// Median wait after an unanswered first IPv6 query before the next
    /// query, over resolutions that had to give up on it.
    pub cad_estimate_ms: Option<f64>,
    pub backoff_detected: bool,
    /// Fallbacks happened, but only as simultaneous queries on both
    /// families, so no delay can be attributed.
    pub parallel: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifyError {
    #[error("no trace contains an authoritative query")]
    Unclassifiable,
}

struct Resolution {
    first_v6: bool,
    used_v6_at: Option<Millis>,
    leading_v6: u32,
    fallback_gap: Option<Millis>,
    parallel: bool,
    backoff: bool,
    interleaves: bool,
    aaaa: AaaaQueryBehavior,
}

fn resolution(trace: &ResolverTrace, opts: &ClassifyOptions) -> Option<Resolution> {
    let auth: Vec<_> = trace.authoritative().collect();
    let first = auth.first()?;
    let first_v4 = auth.iter().find(|e| e.family == Family::V4).map(|e| e.at_ms);
    let first_v6 = auth.iter().find(|e| e.family == Family::V6).map(|e| e.at_ms);
    let answered_v6 = auth
        .iter()
        .filter(|e| e.family == Family::V6)
        .any(|e| first_v4.is_none_or(|v4| e.at_ms + trace.delay_ms <= v4));
    let leading_v6 = auth.iter().take_while(|e| e.family == Family::V6).count() as u32;
    let parallel = matches!((first_v6, first_v4), (Some(v6), Some(v4)) if v6.abs_diff(v4) <= opts.parallel_window_ms);
    // Time waited on an unanswered first IPv6 query before asking again.
    let fallback_gap = match auth.get(1) {
        Some(next) if !parallel && first.family == Family::V6 && next.at_ms < first.at_ms + trace.delay_ms => {
            Some(next.at_ms - first.at_ms)
        }
        _ => None,
    };

    // Retries of one question, whichever family they use.
    let mut by_question: HashMap<(String, u16), Vec<(Millis, Family)>> = HashMap::new();
    for e in &auth {
        by_question.entry((normalize(&e.qname), e.qtype)).or_default().push((e.at_ms, e.family));
    }
    let mut backoff = false;
    let mut interleaves = false;
    for tries in by_question.values() {
        interleaves |= tries.windows(2).any(|w| w[0].1 != w[1].1);
        let gaps: Vec<Millis> = tries.windows(2).map(|w| w[1].0 - w[0].0).collect();
        backoff |= gaps.windows(2).any(|g| g[0] > 0 && g[1] as f64 >= opts.backoff_ratio * g[0] as f64);
    }

    Some(Resolution {
        first_v6: first.family == Family::V6,
        used_v6_at: answered_v6.then_some(trace.delay_ms),
        leading_v6,
        fallback_gap,
        parallel,
        backoff,
        interleaves,
        aaaa: aaaa_behavior(trace, first_v4),
    })
}

fn aaaa_behavior(trace: &ResolverTrace, first_v4_auth: Option<Millis>) -> AaaaQueryBehavior {
    let lookups: Vec<_> = trace.ns_lookups().collect();
    let aaaa = lookups.iter().position(|e| e.qtype == rtype::AAAA);
    let a = lookups.iter().position(|e| e.qtype == rtype::A);
    match (aaaa, a) {
        (None, None) => AaaaQueryBehavior::None,
        (Some(_), None) => AaaaQueryBehavior::EitherNotBoth,
        (None, Some(_)) if first_v4_auth.is_some() => AaaaQueryBehavior::AaaaAfterV4AuthQuery,
        (None, Some(_)) => AaaaQueryBehavior::EitherNotBoth,
        (Some(x), Some(y)) => {
            if first_v4_auth.is_some_and(|v4| lookups[x].at_ms > v4) {
                AaaaQueryBehavior::AaaaAfterV4AuthQuery
            } else if x < y {
                AaaaQueryBehavior::AaaaBeforeA
            } else {
                AaaaQueryBehavior::AaaaAfterA
            }
        }
    }
}

fn median(mut v: Vec<Millis>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_unstable();
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] as f64 } else { (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0 })
}

/// Condenses one resolver's traces into its feature row. Independent of
/// trace order.
pub fn classify(traces: &[ResolverTrace], opts: &ClassifyOptions) -> Result<ResolverVerdict, ClassifyError> {
    let rs: Vec<Resolution> = traces.iter().filter_map(|t| resolution(t, opts)).collect();
    if rs.is_empty() {
        return Err(ClassifyError::Unclassifiable);
    }
    let mut behaviors: BTreeMap<AaaaQueryBehavior, usize> = BTreeMap::new();
    for r in &rs {
        *behaviors.entry(r.aaaa).or_default() += 1;
    }
    // Most frequent; ties go to the earlier variant.
    let aaaa_query_behavior = behaviors
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(b, _)| *b)
        .expect("non-empty");
    let gaps: Vec<Millis> = rs.iter().filter_map(|r| r.fallback_gap).collect();
    Ok(ResolverVerdict {
        aaaa_query_behavior,
        ipv6_share: rs.iter().filter(|r| r.first_v6).count() as f64 / rs.len() as f64,
        resolutions: rs.len(),
        max_ipv6_delay_used_ms: rs.iter().filter_map(|r| r.used_v6_at).max(),
        ipv6_packets_per_resolution: rs.iter().map(|r| r.leading_v6).max().unwrap_or(0),
        interleaves: rs.iter().any(|r| r.interleaves),
        parallel: gaps.is_empty() && rs.iter().any(|r| r.parallel),
        cad_estimate_ms: median(gaps),
        backoff_detected: rs.iter().any(|r| r.backoff),
    })
}

/// Table row plus JSON for one resolver.
pub fn render(name: &str, v: &ResolverVerdict) -> String {
    let delay = v.max_ipv6_delay_used_ms.map_or("-".to_string(), |d| format!("{d} ms"));
    let cad = match (v.cad_estimate_ms, v.parallel) {
        (Some(c), _) => format!("{c} ms"),
        (None, true) => "parallel".to_string(),
        (None, false) => "-".to_string(),
    };
    format!(
        "{name:<16} | {:^10} | {:>6.1}% | {delay:>9} | {:>3} | {cad:>9} | {}\n",
        v.aaaa_query_behavior.glyph(),
        v.ipv6_share * 100.0,
        v.ipv6_packets_per_resolution,
        if v.backoff_detected { "backoff" } else { "" },
    )
}

pub const TABLE_HEADER: &str =
    "resolver         | AAAA query | v6 share | max delay | #v6 |       CAD | notes\n";
