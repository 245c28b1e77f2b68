use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};

use serde::{Deserialize, Serialize};

use super::candidate::EndpointCandidate;
use crate::net::{RecordType, Transport};

/// The subset of an HTTPS/SVCB record the dialer acts on.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceBinding {
    pub priority: u16,
    /// "." means the owner name itself.
    pub target: String,
    pub port: Option<u16>,
    pub alpn: Vec<String>,
    pub ech: bool,
    pub ipv4_hints: Vec<Ipv4Addr>,
    pub ipv6_hints: Vec<Ipv6Addr>,
}

impl ServiceBinding {
    pub fn supports_quic(&self) -> bool {
        self.alpn.iter().any(|p| p == "h3")
    }

    pub fn hints(&self) -> impl Iterator<Item = IpAddr> + '_ {
        self.ipv6_hints
            .iter()
            .copied()
            .map(IpAddr::V6)
            .chain(self.ipv4_hints.iter().copied().map(IpAddr::V4))
    }

    /// Candidates this binding yields for `addresses` (from A/AAAA, each
    /// tagged with its source record) plus its own hints. QUIC variants
    /// precede TCP ones; ECH availability applies to both.
    pub(crate) fn expand(
        &self,
        addresses: &[(IpAddr, RecordType)],
        default_port: u16,
        record: RecordType,
    ) -> Vec<EndpointCandidate> {
        let port = self.port.unwrap_or(default_port);
        let mut transports = Vec::with_capacity(2);
        if self.supports_quic() {
            transports.push(Transport::Quic);
        }
        transports.push(Transport::Tcp);

        let sources = addresses
            .iter()
            .copied()
            .chain(self.hints().map(|a| (a, record)));
        let mut out = Vec::new();
        for (address, source) in sources {
            for &transport in &transports {
                if let Ok(c) = EndpointCandidate::new(address, port, transport, self.ech, source) {
                    out.push(c);
                }
            }
        }
        out
    }
}
