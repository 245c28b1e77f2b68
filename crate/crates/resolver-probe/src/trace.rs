use helab_core::{Family, Millis};
use helab_dns::{QueryLogEntry, ZoneSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub at_ms: Millis,
    /// Transport the query reached the authoritative server over.
    pub family: Family,
    pub qtype: u16,
    pub qname: String,
}

/// Everything one resolution of one campaign zone looked like from the
/// authoritative side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolverTrace {
    pub apex: String,
    pub delay_ms: Millis,
    pub ns_names: Vec<String>,
    /// Time ordered.
    pub events: Vec<TraceEvent>,
}

pub(crate) fn normalize(name: &str) -> String {
    name.trim_end_matches('.').to_ascii_lowercase()
}

impl ResolverTrace {
    pub fn new(apex: &str, delay_ms: Millis, ns_names: &[String]) -> Self {
        Self { apex: apex.to_string(), delay_ms, ns_names: ns_names.to_vec(), events: Vec::new() }
    }

    pub fn for_zone(zone: &ZoneSpec) -> Self {
        Self::new(&zone.apex, zone.ipv6_delay_ms, &zone.ns_names)
    }

    pub fn push(&mut self, at_ms: Millis, family: Family, qtype: u16, qname: &str) -> &mut Self {
        self.events.push(TraceEvent { at_ms, family, qtype, qname: qname.to_string() });
        self.events.sort_by_key(|e| e.at_ms);
        self
    }

    pub fn is_ns_lookup(&self, event: &TraceEvent) -> bool {
        let q = normalize(&event.qname);
        self.ns_names.iter().any(|n| normalize(n) == q)
    }

    /// Whether a query name belongs to this trace.
    pub fn covers(&self, qname: &str) -> bool {
        let q = normalize(qname);
        let apex = normalize(&self.apex);
        q == apex || q.ends_with(&format!(".{apex}")) || self.ns_names.iter().any(|n| normalize(n) == q)
    }

    /// Queries for names in the zone, NS-name lookups excluded.
    pub fn authoritative(&self) -> impl Iterator<Item = &TraceEvent> {
        self.events.iter().filter(|e| !self.is_ns_lookup(e))
    }

    pub fn ns_lookups(&self) -> impl Iterator<Item = &TraceEvent> {
        self.events.iter().filter(|e| self.is_ns_lookup(e))
    }
}

/// Splits a dns_lab query log into one trace per campaign zone.
pub fn traces_from_log(entries: &[QueryLogEntry], zones: &[ZoneSpec]) -> Vec<ResolverTrace> {
    let mut traces: Vec<ResolverTrace> = zones.iter().map(ResolverTrace::for_zone).collect();
    let mut sorted: Vec<&QueryLogEntry> = entries.iter().collect();
    sorted.sort_by_key(|e| e.at_ms);
    for e in sorted {
        if let Some(t) = traces.iter_mut().find(|t| t.covers(&e.qname)) {
            t.events.push(TraceEvent { at_ms: e.at_ms, family: e.family, qtype: e.qtype, qname: e.qname.clone() });
        }
    }
    traces
}
