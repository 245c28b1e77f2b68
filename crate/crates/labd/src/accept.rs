use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use helab_core::{Family, Millis};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptEvent {
    pub at_ms: Millis,
    pub tier_index: Option<usize>,
    pub family: Family,
    pub local: SocketAddr,
    pub peer: SocketAddr,
}

/// Server-side timestamps of accepted connections, relative to a shared
/// epoch.
#[derive(Debug, Clone)]
pub struct AcceptLog {
    epoch: Instant,
    entries: Arc<Mutex<Vec<AcceptEvent>>>,
}

impl AcceptLog {
    pub fn new(epoch: Instant) -> Self {
        Self { epoch, entries: Arc::default() }
    }

    pub fn epoch(&self) -> Instant {
        self.epoch
    }

    pub fn now_ms(&self) -> Millis {
        self.epoch.elapsed().as_millis() as Millis
    }

    pub fn record(&self, tier_index: Option<usize>, local: SocketAddr, peer: SocketAddr) {
        let event = AcceptEvent {
            at_ms: self.now_ms(),
            tier_index,
            family: Family::of(&peer.ip()),
            local,
            peer,
        };
        self.entries.lock().expect("accept log poisoned").push(event);
    }

    pub fn entries(&self) -> Vec<AcceptEvent> {
        self.entries.lock().expect("accept log poisoned").clone()
    }

    pub fn since(&self, from_ms: Millis) -> Vec<AcceptEvent> {
        self.entries().into_iter().filter(|e| e.at_ms >= from_ms).collect()
    }
}
