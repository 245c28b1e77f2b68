//! Authoritative-side traces of idealized resolvers, for exercising the
//! classifier without a live resolver.

use helab_core::{Family, Millis};
use helab_dns::wire::rtype;

use crate::trace::ResolverTrace;

/// Timeout-driven resolver model.
#[derive(Debug, Clone)]
pub struct ResolverModel {
    /// Looks up AAAA for the NS name before A.
    pub aaaa_first: bool,
    /// Looks up AAAA for the NS name only after querying over IPv4.
    pub aaaa_late: bool,
    /// Resolutions (by zone index) that start over IPv6.
    pub v6_first: fn(usize) -> bool,
    /// Wait before giving up on an IPv6 query.
    pub timeout_ms: Millis,
    /// Resolutions that retry IPv6 once, waiting `timeout * backoff`.
    pub retries_v6: fn(usize) -> bool,
    pub backoff: Millis,
}

impl ResolverModel {
    /// A then AAAA, always IPv6 first, falls back after 800 ms.
    pub fn bind_like() -> Self {
        Self { aaaa_first: false, aaaa_late: false, v6_first: |_| true, timeout_ms: 800, retries_v6: |_| false, backoff: 1 }
    }

    /// AAAA then A, IPv6 first for 7 of every 16 zones, 376 ms timeout and
    /// a tripled-timeout IPv6 retry on every other fallback.
    pub fn unbound_like() -> Self {
        Self {
            aaaa_first: true,
            aaaa_late: false,
            v6_first: |i| [0, 2, 3, 5, 8, 11, 13].contains(&(i % 16)),
            timeout_ms: 376,
            retries_v6: |i| i % 2 == 1,
            backoff: 3,
        }
    }

    /// IPv4 only; asks for AAAA after the first IPv4 query.
    pub fn ipv4_only() -> Self {
        Self { aaaa_first: false, aaaa_late: true, v6_first: |_| false, timeout_ms: 0, retries_v6: |_| false, backoff: 1 }
    }

    /// One resolution of the zone `i` with the given IPv6 hold.
    pub fn trace(&self, i: usize, apex: &str, ns_name: &str, delay_ms: Millis) -> ResolverTrace {
        let www = format!("www.{apex}");
        let mut t = ResolverTrace::new(apex, delay_ms, &[ns_name.to_string()]);
        let mut at = 0;
        if !self.aaaa_late {
            let order = if self.aaaa_first { [rtype::AAAA, rtype::A] } else { [rtype::A, rtype::AAAA] };
            for qtype in order {
                t.push(at, Family::V4, qtype, ns_name);
                at += 1;
            }
        } else {
            t.push(at, Family::V4, rtype::A, ns_name);
            at += 1;
        }
        if (self.v6_first)(i) {
            t.push(at, Family::V6, rtype::A, &www);
            if delay_ms > self.timeout_ms {
                let mut wait = self.timeout_ms;
                if (self.retries_v6)(i) {
                    at += wait;
                    t.push(at, Family::V6, rtype::A, &www);
                    wait *= self.backoff;
                }
                let retry_answered = (self.retries_v6)(i) && delay_ms <= wait;
                if !retry_answered {
                    t.push(at + wait, Family::V4, rtype::A, &www);
                }
            }
        } else {
            t.push(at, Family::V4, rtype::A, &www);
            if self.aaaa_late {
                t.push(at + 2, Family::V4, rtype::AAAA, ns_name);
            }
        }
        t
    }

    /// Traces for zones `z<i>-d<delay>` below `parent`.
    pub fn campaign(&self, delays: &[Millis], parent: &str) -> Vec<ResolverTrace> {
        delays
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                let apex = format!("z{i}-d{d}.{parent}");
                let ns = format!("ns-z{i}-d{d}.{parent}");
                self.trace(i, &apex, &ns, d)
            })
            .collect()
    }
}
