use std::net::SocketAddr;

use helab_core::Family;
use serde::{Deserialize, Serialize};

use crate::ladder::DelayTier;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EchoResponse {
    pub client_address: String,
    pub family: Family,
    pub tier_index: usize,
    pub delay_ms: u64,
    pub domain: String,
    pub server_timestamp_ms: u64,
    pub run_nonce: Option<String>,
}

/// Built only from the current connection and tier.
pub fn echo_for(tier: &DelayTier, peer: SocketAddr, now_ms: u64, run_nonce: Option<String>) -> EchoResponse {
    let ip = match peer.ip() {
        std::net::IpAddr::V6(v6) => v6.to_ipv4_mapped().map_or(peer.ip(), Into::into),
        ip => ip,
    };
    EchoResponse {
        client_address: ip.to_string(),
        family: Family::of(&ip),
        tier_index: tier.tier_index,
        delay_ms: tier.delay_ms,
        domain: tier.domain.clone(),
        server_timestamp_ms: now_ms,
        run_nonce,
    }
}
