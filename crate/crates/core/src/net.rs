use std::fmt;
use std::net::IpAddr;

use serde::{Deserialize, Serialize};

/// Milliseconds, used both for durations and for timestamps relative to the
/// start of a run.
pub type Millis = u64;

/// IP address family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "ipv4", alias = "IPv4", alias = "v4")]
    V4,
    #[serde(rename = "ipv6", alias = "IPv6", alias = "v6")]
    V6,
}

impl Family {
    pub fn of(addr: &IpAddr) -> Self {
        match addr {
            IpAddr::V4(_) => Family::V4,
            IpAddr::V6(v6) => match v6.to_ipv4_mapped() {
                Some(_) => Family::V4,
                None => Family::V6,
            },
        }
    }

    pub fn other(self) -> Self {
        match self {
            Family::V4 => Family::V6,
            Family::V6 => Family::V4,
        }
    }

    /// The address record type that carries this family.
    pub fn record_type(self) -> RecordType {
        match self {
            Family::V4 => RecordType::A,
            Family::V6 => RecordType::Aaaa,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::V4 => "IPv4",
            Family::V6 => "IPv6",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transport {
    Tcp,
    Quic,
}

/// DNS record types the dialer cares about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RecordType {
    A,
    Aaaa,
    Https,
    Svcb,
}

impl RecordType {
    /// Address family for A/AAAA, `None` for service binding records.
    pub fn family(self) -> Option<Family> {
        match self {
            RecordType::A => Some(Family::V4),
            RecordType::Aaaa => Some(Family::V6),
            RecordType::Https | RecordType::Svcb => None,
        }
    }

    pub fn is_service_binding(self) -> bool {
        matches!(self, RecordType::Https | RecordType::Svcb)
    }
}

impl fmt::Display for RecordType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecordType::A => "A",
            RecordType::Aaaa => "AAAA",
            RecordType::Https => "HTTPS",
            RecordType::Svcb => "SVCB",
        })
    }
}

/// Identifies one connection attempt within a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttemptId(pub u32);

impl fmt::Display for AttemptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mapped_v4_counts_as_v4() {
        let addr: IpAddr = "::ffff:192.0.2.1".parse().unwrap();
        assert_eq!(Family::of(&addr), Family::V4);
        let addr: IpAddr = "2001:db8::1".parse().unwrap();
        assert_eq!(Family::of(&addr), Family::V6);
    }

    #[test]
    fn record_type_serde_names() {
        assert_eq!(serde_json::to_string(&RecordType::Aaaa).unwrap(), "\"AAAA\"");
        assert_eq!(serde_json::to_string(&Family::V6).unwrap(), "\"ipv6\"");
        let f: Family = serde_json::from_str("\"IPv4\"").unwrap();
        assert_eq!(f, Family::V4);
    }
}
