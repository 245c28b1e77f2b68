use std::collections::HashMap;

use serde::Serialize;

use super::candidate::EndpointCandidate;
use crate::net::Millis;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CacheEntry {
    pub destination: String,
    pub winner: EndpointCandidate,
    pub expires_at: Millis,
}

/// Remembers the winning candidate per destination name.
#[derive(Debug, Clone, Default)]
pub struct ResultCache {
    entries: HashMap<String, CacheEntry>,
}

impl ResultCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, entry: CacheEntry) {
        self.entries.insert(entry.destination.clone(), entry);
    }

    /// Hit iff an entry exists and `now < expires_at`; an entry is already
    /// stale at its expiry instant.
    pub fn lookup(&self, destination: &str, now: Millis) -> Option<&EndpointCandidate> {
        self.entries
            .get(destination)
            .filter(|e| now < e.expires_at)
            .map(|e| &e.winner)
    }

    pub fn purge_expired(&mut self, now: Millis) {
        self.entries.retain(|_, e| now < e.expires_at);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(expires_at: Millis) -> CacheEntry {
        CacheEntry {
            destination: "example.test".into(),
            winner: EndpointCandidate::tcp("2001:db8::1".parse().unwrap(), 443),
            expires_at,
        }
    }

    #[test]
    fn expiry_is_strict() {
        let mut cache = ResultCache::new();
        // Inserted at t=0 with the default 600 s TTL.
        cache.insert(entry(600_000));
        assert!(cache.lookup("example.test", 599_000).is_some());
        assert!(cache.lookup("example.test", 599_999).is_some());
        assert!(cache.lookup("example.test", 600_000).is_none());
    }

    #[test]
    fn unknown_name_misses() {
        let cache = ResultCache::new();
        assert!(cache.lookup("never.seen", 0).is_none());
    }

    #[test]
    fn purge_drops_stale_entries() {
        let mut cache = ResultCache::new();
        cache.insert(entry(10));
        cache.purge_expired(10);
        assert!(cache.is_empty());
    }
}
