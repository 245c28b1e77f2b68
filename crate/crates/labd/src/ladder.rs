use std::collections::HashSet;
use std::net::{Ipv4Addr, Ipv6Addr, SocketAddr};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default tier delays in ms: dense around the usual CAD values, sparse
/// above.
pub const DEFAULT_DELAYS: [u64; 18] = [
    0, 50, 100, 150, 200, 250, 300, 350, 400, 500, 600, 800, 1000, 1500, 2000, 2500, 3000, 5000,
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayTier {
    pub tier_index: usize,
    pub delay_ms: u64,
    pub domain: String,
    pub v4_endpoint: SocketAddr,
    pub v6_endpoint: SocketAddr,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ladder {
    /// Sessions record this so observations never mix ladders.
    pub version: u32,
    pub tiers: Vec<DelayTier>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LadderError {
    #[error("ladder has no tiers")]
    Empty,
    #[error("tier delays must strictly increase (tier {0})")]
    NotIncreasing(usize),
    #[error("duplicate tier domain {0}")]
    DuplicateDomain(String),
    #[error("tier {0} has index {1}")]
    BadIndex(usize, usize),
    #[error("tier {0}: endpoint family mismatch")]
    EndpointFamily(usize),
}

impl Ladder {
    /// One domain per tier, `t<index>-d<delay>.<base_domain>`, and one port
    /// per tier shared by both families (`base_port + index`, or ephemeral
    /// when `base_port` is 0).
    pub fn desk_scale(
        delays: &[u64],
        base_domain: &str,
        v4: Ipv4Addr,
        v6: Ipv6Addr,
        base_port: u16,
    ) -> Result<Self, LadderError> {
        let base = base_domain.trim_end_matches('.');
        let tiers = delays
            .iter()
            .enumerate()
            .map(|(i, &delay_ms)| {
                let port = if base_port == 0 { 0 } else { base_port + i as u16 };
                DelayTier {
                    tier_index: i,
                    delay_ms,
                    domain: format!("t{i}-d{delay_ms}.{base}"),
                    v4_endpoint: SocketAddr::new(v4.into(), port),
                    v6_endpoint: SocketAddr::new(v6.into(), port),
                }
            })
            .collect();
        let ladder = Self { version: 1, tiers };
        ladder.validate()?;
        Ok(ladder)
    }

    pub fn default_loopback(base_port: u16) -> Self {
        Self::desk_scale(
            &DEFAULT_DELAYS,
            "he-test.example",
            Ipv4Addr::LOCALHOST,
            Ipv6Addr::LOCALHOST,
            base_port,
        )
        .expect("default ladder is valid")
    }

    pub fn from_toml(input: &str) -> anyhow::Result<Self> {
        let ladder: Self = toml::from_str(input)?;
        ladder.validate()?;
        Ok(ladder)
    }

    pub fn validate(&self) -> Result<(), LadderError> {
        if self.tiers.is_empty() {
            return Err(LadderError::Empty);
        }
        let mut domains = HashSet::new();
        for (i, tier) in self.tiers.iter().enumerate() {
            if tier.tier_index != i {
                return Err(LadderError::BadIndex(i, tier.tier_index));
            }
            if i > 0 && tier.delay_ms <= self.tiers[i - 1].delay_ms {
                return Err(LadderError::NotIncreasing(i));
            }
            if !tier.v4_endpoint.is_ipv4() || !tier.v6_endpoint.is_ipv6() {
                return Err(LadderError::EndpointFamily(i));
            }
            if !domains.insert(normalize_host(&tier.domain)) {
                return Err(LadderError::DuplicateDomain(tier.domain.clone()));
            }
        }
        Ok(())
    }

    /// Matches a Host header (port and trailing dot ignored).
    pub fn tier_for_host(&self, host: &str) -> Option<&DelayTier> {
        let host = normalize_host(host);
        self.tiers.iter().find(|t| normalize_host(&t.domain) == host)
    }

    pub fn delays(&self) -> Vec<u64> {
        self.tiers.iter().map(|t| t.delay_ms).collect()
    }
}

fn normalize_host(host: &str) -> String {
    let host = if let Some(rest) = host.strip_prefix('[') {
        rest.split(']').next().unwrap_or(rest)
    } else {
        host.rsplit_once(':').map_or(host, |(h, _)| h)
    };
    host.trim_end_matches('.').to_ascii_lowercase()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_ladder_has_eighteen_tiers() {
        let l = Ladder::default_loopback(18000);
        assert_eq!(l.tiers.len(), 18);
        assert_eq!(l.tiers[0].delay_ms, 0);
        assert_eq!(l.tiers[17].delay_ms, 5000);
        assert_eq!(l.tiers[5].v4_endpoint.port(), l.tiers[5].v6_endpoint.port());
    }

    #[test]
    fn host_lookup_ignores_port_and_case() {
        let l = Ladder::default_loopback(0);
        assert_eq!(l.tier_for_host("T4-D200.he-test.example:8080").unwrap().tier_index, 4);
        assert_eq!(l.tier_for_host("t4-d200.he-test.example.").unwrap().tier_index, 4);
        assert!(l.tier_for_host("[::1]:80").is_none());
        assert!(l.tier_for_host("unknown.example").is_none());
    }

    #[test]
    fn validation() {
        let mut l = Ladder::default_loopback(0);
        l.tiers[3].delay_ms = 100;
        assert_eq!(l.validate(), Err(LadderError::NotIncreasing(3)));
        let mut l = Ladder::default_loopback(0);
        l.tiers[2].domain = l.tiers[1].domain.clone();
        assert!(matches!(l.validate(), Err(LadderError::DuplicateDomain(_))));
    }

    #[test]
    fn toml_round_trip() {
        let l = Ladder::default_loopback(0);
        let text = toml::to_string(&l).unwrap();
        assert_eq!(Ladder::from_toml(&text).unwrap(), l);
    }
}
