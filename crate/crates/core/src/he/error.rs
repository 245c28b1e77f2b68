use std::net::IpAddr;

use thiserror::Error;

use crate::net::{Family, Millis, RecordType};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HeError {
    #[error("candidate set is empty")]
    EmptyCandidateSet,
    #[error("duplicate {0} response")]
    DuplicateResponse(RecordType),
    #[error("resolution failed for both address families")]
    ResolutionFailed,
    #[error("address {address} does not belong to family {family}")]
    FamilyMismatch { address: IpAddr, family: Family },
    #[error("{record} record cannot carry address {address}")]
    RecordFamilyMismatch { record: RecordType, address: IpAddr },
    #[error("port 0 is not dialable")]
    ZeroPort,
    #[error("connection attempt delay {cad} ms outside [{min}, {max}] ms")]
    CadOutOfBounds { cad: Millis, min: Millis, max: Millis },
    #[error("resolution delay must be positive for v2 and v3")]
    ZeroResolutionDelay,
    #[error("first address family count must be at least 1")]
    ZeroFirstAddressFamilyCount,
}
