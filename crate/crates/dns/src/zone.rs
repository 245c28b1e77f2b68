//! Static zones, and per-delay zone sets for resolver measurements.

use std::net::IpAddr;

use helab_core::he::ServiceBinding;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AddressRecord {
    pub name: String,
    pub address: IpAddr,
    #[serde(default)]
    pub ttl: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HttpsRecord {
    pub name: String,
    pub binding: ServiceBinding,
    #[serde(default)]
    pub ttl: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SoaSpec {
    pub serial: u32,
    pub refresh: u32,
    pub retry: u32,
    pub expire: u32,
    pub minimum: u32,
}

impl Default for SoaSpec {
    fn default() -> Self {
        Self {
            serial: 1,
            refresh: 3600,
            retry: 600,
            expire: 86_400,
            minimum: 0,
        }
    }
}

/// One authoritative zone. `a_records`/`aaaa_records` may also hold the
/// addresses of NS names that live outside the apex; those are served
/// without delay.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoneSpec {
    pub apex: String,
    pub ns_names: Vec<String>,
    #[serde(default)]
    pub a_records: Vec<AddressRecord>,
    #[serde(default)]
    pub aaaa_records: Vec<AddressRecord>,
    #[serde(default)]
    pub https_records: Vec<HttpsRecord>,
    #[serde(default)]
    pub soa: SoaSpec,
    /// Hold applied to queries for names inside the apex that arrive over
    /// IPv6.
    #[serde(default)]
    pub ipv6_delay_ms: u64,
}

/// Shared inputs for [`synthesize_resolver_zones`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZoneTemplate {
    /// Every generated apex sits directly below this name.
    pub parent: String,
    /// Distinguishes campaigns so that reruns never reuse a name.
    pub campaign: String,
    /// Addresses of this server, published for the NS names.
    pub ns_addresses: Vec<IpAddr>,
    /// Addresses published for the test name `www.<apex>`.
    pub target_addresses: Vec<IpAddr>,
    /// NS names inside the apex (served as glue) instead of under `parent`.
    pub glue: bool,
    pub ttl: u32,
}

impl ZoneSpec {
    /// The name a resolver under test is asked to resolve.
    pub fn test_name(&self) -> String {
        format!("www.{}", self.apex)
    }
}

/// One zone per delay, each with its own apex and NS names.
pub fn synthesize_resolver_zones(delays: &[u64], template: &ZoneTemplate) -> Vec<ZoneSpec> {
    let parent = template.parent.trim_end_matches('.');
    delays
        .iter()
        .enumerate()
        .map(|(i, &delay)| {
            let tag = format!("{}-z{i}-d{delay}", template.campaign);
            let apex = format!("{tag}.{parent}.");
            let ns = if template.glue {
                format!("ns1.{apex}")
            } else {
                format!("ns-{tag}.{parent}.")
            };
            let www = format!("www.{apex}");
            let record = |name: &str, address: IpAddr| AddressRecord {
                name: name.to_string(),
                address,
                ttl: template.ttl,
            };
            let mut zone = ZoneSpec {
                apex,
                ns_names: vec![ns.clone()],
                a_records: Vec::new(),
                aaaa_records: Vec::new(),
                https_records: Vec::new(),
                soa: SoaSpec::default(),
                ipv6_delay_ms: delay,
            };
            for (name, address) in template
                .target_addresses
                .iter()
                .map(|a| (www.as_str(), *a))
                .chain(template.ns_addresses.iter().map(|a| (ns.as_str(), *a)))
            {
                match address {
                    IpAddr::V4(_) => zone.a_records.push(record(name, address)),
                    IpAddr::V6(_) => zone.aaaa_records.push(record(name, address)),
                }
            }
            zone
        })
        .collect()
}
