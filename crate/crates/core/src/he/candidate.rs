use std::net::{IpAddr, SocketAddr};

use serde::{Deserialize, Serialize};

use super::error::HeError;
use crate::net::{Family, RecordType, Transport};

/// One dialable target.
///
/// The family is derived from the address, and A/AAAA sourced candidates
/// must carry an address of the matching family.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawCandidate")]
pub struct EndpointCandidate {
    family: Family,
    address: IpAddr,
    port: u16,
    transport: Transport,
    ech_available: bool,
    source_record: RecordType,
}

impl EndpointCandidate {
    pub fn new(
        address: IpAddr,
        port: u16,
        transport: Transport,
        ech_available: bool,
        source_record: RecordType,
    ) -> Result<Self, HeError> {
        if port == 0 {
            return Err(HeError::ZeroPort);
        }
        let family = Family::of(&address);
        if let Some(expected) = source_record.family() {
            if expected != family {
                return Err(HeError::RecordFamilyMismatch {
                    record: source_record,
                    address,
                });
            }
        }
        Ok(Self {
            family,
            address,
            port,
            transport,
            ech_available,
            source_record,
        })
    }

    /// Plain TCP candidate sourced from the address record of its family.
    ///
    /// # Panics
    ///
    /// Panics if `port` is 0.
    pub fn tcp(address: IpAddr, port: u16) -> Self {
        let record = Family::of(&address).record_type();
        Self::new(address, port, Transport::Tcp, false, record).expect("valid tcp candidate")
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn address(&self) -> IpAddr {
        self.address
    }

    pub fn port(&self) -> u16 {
        self.port
    }

    pub fn transport(&self) -> Transport {
        self.transport
    }

    pub fn ech_available(&self) -> bool {
        self.ech_available
    }

    pub fn source_record(&self) -> RecordType {
        self.source_record
    }

    pub fn socket_addr(&self) -> SocketAddr {
        SocketAddr::new(self.address, self.port)
    }

    pub fn with_transport(mut self, transport: Transport) -> Self {
        self.transport = transport;
        self
    }

    pub fn with_ech(mut self, ech_available: bool) -> Self {
        self.ech_available = ech_available;
        self
    }

    /// Identity used for de-duplication across record types.
    pub(crate) fn dedup_key(&self) -> (Family, IpAddr, u16, Transport) {
        (self.family, self.address, self.port, self.transport)
    }
}

#[derive(Deserialize)]
struct RawCandidate {
    #[allow(dead_code)]
    family: Option<Family>,
    address: IpAddr,
    port: u16,
    transport: Transport,
    #[serde(default)]
    ech_available: bool,
    source_record: RecordType,
}

impl TryFrom<RawCandidate> for EndpointCandidate {
    type Error = HeError;

    fn try_from(raw: RawCandidate) -> Result<Self, Self::Error> {
        let candidate = EndpointCandidate::new(
            raw.address,
            raw.port,
            raw.transport,
            raw.ech_available,
            raw.source_record,
        )?;
        match raw.family {
            Some(family) if family != candidate.family => Err(HeError::FamilyMismatch {
                address: raw.address,
                family,
            }),
            _ => Ok(candidate),
        }
    }
}

/// Keeps the first occurrence of each (family, address, port, transport).
pub(crate) fn dedup(candidates: impl IntoIterator<Item = EndpointCandidate>) -> Vec<EndpointCandidate> {
    let mut seen = std::collections::HashSet::new();
    candidates
        .into_iter()
        .filter(|c| seen.insert(c.dedup_key()))
        .collect()
}
