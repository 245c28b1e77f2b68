use std::collections::BTreeMap;
use std::net::{Ipv4Addr, Ipv6Addr, SocketAddr};

use serde::{Deserialize, Serialize};

use crate::he::ServiceBinding;
use crate::net::{Family, Millis, RecordType};

pub const DEFAULT_HORIZON: Millis = 30_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DnsDelay {
    After(Millis),
    /// The answer never arrives.
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectBehavior {
    Delay(Millis),
    Refuse,
    /// The attempt never completes.
    Blackhole,
}

/// What the simulated resolver knows about the destination.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Records {
    pub a: Vec<Ipv4Addr>,
    pub aaaa: Vec<Ipv6Addr>,
    pub https: Vec<ServiceBinding>,
}

/// ```
/// use helab_core::simnet::{ConnectBehavior, Scenario};
///
/// let s = Scenario::from_toml(r#"
///     [records]
///     aaaa = ["2001:db8::1"]
///     a = ["192.0.2.1"]
///     [dns_delays]
///     AAAA = { after = 40 }
///     [connect_delays]
///     "[2001:db8::1]:443" = "blackhole"
///     [family_delay]
///     ipv6 = 100
/// "#).unwrap();
/// assert_eq!(s.connect_delays.values().next(), Some(&ConnectBehavior::Blackhole));
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub records: Records,
    /// Missing record types answer immediately.
    pub dns_delays: BTreeMap<RecordType, DnsDelay>,
    pub connect_delays: BTreeMap<SocketAddr, ConnectBehavior>,
    /// Added to every connect of that family.
    pub family_delay: BTreeMap<Family, Millis>,
    /// Reserved for jitter; nothing consumes it yet.
    pub seed: u64,
    pub horizon: Millis,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            records: Records::default(),
            dns_delays: BTreeMap::new(),
            connect_delays: BTreeMap::new(),
            family_delay: BTreeMap::new(),
            seed: 0,
            horizon: DEFAULT_HORIZON,
        }
    }
}

impl Scenario {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_toml(input: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(input)
    }

    pub fn with_a(mut self, addresses: impl IntoIterator<Item = Ipv4Addr>) -> Self {
        self.records.a.extend(addresses);
        self
    }

    pub fn with_aaaa(mut self, addresses: impl IntoIterator<Item = Ipv6Addr>) -> Self {
        self.records.aaaa.extend(addresses);
        self
    }

    pub fn with_https(mut self, binding: ServiceBinding) -> Self {
        self.records.https.push(binding);
        self
    }

    pub fn with_dns_delay(mut self, record: RecordType, delay: DnsDelay) -> Self {
        self.dns_delays.insert(record, delay);
        self
    }

    pub fn with_connect(mut self, endpoint: SocketAddr, behavior: ConnectBehavior) -> Self {
        self.connect_delays.insert(endpoint, behavior);
        self
    }

    pub fn with_family_delay(mut self, family: Family, delay: Millis) -> Self {
        self.family_delay.insert(family, delay);
        self
    }

    pub fn with_horizon(mut self, horizon: Millis) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn dns_delay(&self, record: RecordType) -> DnsDelay {
        self.dns_delays
            .get(&record)
            .copied()
            .unwrap_or(DnsDelay::After(0))
    }
}
