use std::collections::HashSet;
use std::net::IpAddr;

use serde::{Deserialize, Serialize};

use super::candidate::{dedup, EndpointCandidate};
use super::config::{HeConfig, Version};
use super::error::HeError;
use super::svcb::ServiceBinding;
use crate::net::{Family, Millis, RecordType, Transport};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DnsPayload {
    Addresses(Vec<IpAddr>),
    Services(Vec<ServiceBinding>),
    /// Resolver error or timeout.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DnsEvent {
    pub record_type: RecordType,
    pub at: Millis,
    pub payload: DnsPayload,
}

impl DnsEvent {
    pub fn addresses(record_type: RecordType, at: Millis, addresses: Vec<IpAddr>) -> Self {
        Self {
            record_type,
            at,
            payload: DnsPayload::Addresses(addresses),
        }
    }

    pub fn failed(record_type: RecordType, at: Millis) -> Self {
        Self {
            record_type,
            at,
            payload: DnsPayload::Failed,
        }
    }
}

/// Arrival time plus addresses; an empty list is a negative answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordResponse {
    pub at: Millis,
    pub addresses: Vec<IpAddr>,
}

impl RecordResponse {
    pub fn is_positive(&self) -> bool {
        !self.addresses.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceResponse {
    pub at: Millis,
    pub bindings: Vec<ServiceBinding>,
}

/// What the dialer should do after a resolution event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    /// Enter the connection phase with these candidates (unordered).
    StartConnecting(Vec<EndpointCandidate>),
    /// Already connecting; merge these newly learned candidates.
    AddCandidates(Vec<EndpointCandidate>),
    /// A arrived first: hold until this Resolution Delay deadline unless AAAA
    /// shows up.
    Wait(Millis),
    /// Nothing to do until another response arrives.
    Pending,
}

/// Answers received so far for one destination.
#[derive(Debug, Clone)]
pub struct ResolutionState {
    port: u16,
    a_response: Option<RecordResponse>,
    aaaa_response: Option<RecordResponse>,
    svcb_response: Option<ServiceResponse>,
    rd_deadline: Option<Millis>,
    connecting: bool,
    emitted: HashSet<(Family, IpAddr, u16, Transport)>,
}

impl ResolutionState {
    pub fn new(port: u16) -> Self {
        Self {
            port,
            a_response: None,
            aaaa_response: None,
            svcb_response: None,
            rd_deadline: None,
            connecting: false,
            emitted: HashSet::new(),
        }
    }

    pub fn a_response(&self) -> Option<&RecordResponse> {
        self.a_response.as_ref()
    }

    pub fn aaaa_response(&self) -> Option<&RecordResponse> {
        self.aaaa_response.as_ref()
    }

    pub fn svcb_response(&self) -> Option<&ServiceResponse> {
        self.svcb_response.as_ref()
    }

    /// Set once A arrives ahead of AAAA; always `a.at + resolution_delay`.
    pub fn rd_deadline(&self) -> Option<Millis> {
        self.rd_deadline
    }

    pub fn is_connecting(&self) -> bool {
        self.connecting
    }

    /// Record types still awaited.
    pub fn pending_records(&self, config: &HeConfig) -> Vec<RecordType> {
        let mut pending = Vec::new();
        if self.aaaa_response.is_none() {
            pending.push(RecordType::Aaaa);
        }
        if self.a_response.is_none() {
            pending.push(RecordType::A);
        }
        if config.version == Version::V3 && self.svcb_response.is_none() {
            pending.push(RecordType::Https);
        }
        pending
    }

    pub fn on_dns_event(&mut self, event: DnsEvent, config: &HeConfig) -> Result<Action, HeError> {
        let DnsEvent {
            record_type,
            at,
            payload,
        } = event;
        match record_type {
            RecordType::A | RecordType::Aaaa => {
                let slot = if record_type == RecordType::A {
                    &mut self.a_response
                } else {
                    &mut self.aaaa_response
                };
                if slot.is_some() {
                    return Err(HeError::DuplicateResponse(record_type));
                }
                let addresses = match payload {
                    DnsPayload::Addresses(addresses) => addresses,
                    DnsPayload::Services(_) | DnsPayload::Failed => Vec::new(),
                };
                if let Some(bad) = addresses
                    .iter()
                    .find(|a| Some(Family::of(a)) != record_type.family())
                {
                    return Err(HeError::RecordFamilyMismatch {
                        record: record_type,
                        address: *bad,
                    });
                }
                *slot = Some(RecordResponse { at, addresses });
            }
            RecordType::Https | RecordType::Svcb => {
                if self.svcb_response.is_some() {
                    return Err(HeError::DuplicateResponse(record_type));
                }
                let bindings = match payload {
                    DnsPayload::Services(b) => b,
                    DnsPayload::Addresses(_) | DnsPayload::Failed => Vec::new(),
                };
                self.svcb_response = Some(ServiceResponse { at, bindings });
                if config.version != Version::V3 {
                    return Ok(self.idle());
                }
            }
        }

        let a_done = self.a_response.as_ref();
        let aaaa_done = self.aaaa_response.as_ref();
        if let (Some(a), Some(aaaa)) = (a_done, aaaa_done) {
            if !a.is_positive() && !aaaa.is_positive() && self.hint_count() == 0 {
                return Err(HeError::ResolutionFailed);
            }
        }

        if self.connecting {
            let fresh = self.take_fresh(config);
            return Ok(if fresh.is_empty() {
                Action::Pending
            } else {
                Action::AddCandidates(fresh)
            });
        }

        let a_positive = a_done.is_some_and(RecordResponse::is_positive);
        let aaaa_positive = aaaa_done.is_some_and(RecordResponse::is_positive);
        match config.effective_resolution_delay() {
            // v1 has no resolution phase of its own: wait for both answers.
            None => {
                if a_done.is_some() && aaaa_done.is_some() {
                    return Ok(self.start(config));
                }
                Ok(Action::Pending)
            }
            Some(rd) => {
                if aaaa_positive || (a_positive && aaaa_done.is_some()) {
                    return Ok(self.start(config));
                }
                if a_positive && record_type == RecordType::A {
                    let deadline = at + rd;
                    self.rd_deadline = Some(deadline);
                    return Ok(Action::Wait(deadline));
                }
                // AAAA answered negatively, A still due: no point waiting
                // for anything but A.
                Ok(self.idle())
            }
        }
    }

    /// Resolution Delay timer check. Starts IPv4 (and any hinted) candidates
    /// once the deadline has passed without a AAAA answer.
    pub fn on_timer(&mut self, now: Millis, config: &HeConfig) -> Action {
        match self.rd_deadline {
            Some(deadline) if !self.connecting && now >= deadline => self.start(config),
            _ => self.idle(),
        }
    }

    fn idle(&self) -> Action {
        match (self.connecting, self.rd_deadline) {
            (false, Some(deadline)) => Action::Wait(deadline),
            _ => Action::Pending,
        }
    }

    fn start(&mut self, config: &HeConfig) -> Action {
        self.connecting = true;
        Action::StartConnecting(self.take_fresh(config))
    }

    fn hint_count(&self) -> usize {
        self.svcb_response
            .as_ref()
            .map(|s| s.bindings.iter().map(|b| b.hints().count()).sum())
            .unwrap_or(0)
    }

    /// All candidates derivable from the answers so far, de-duplicated with
    /// the earliest source winning.
    fn candidates(&self, config: &HeConfig) -> Vec<EndpointCandidate> {
        let mut addresses: Vec<(IpAddr, RecordType)> = Vec::new();
        if let Some(aaaa) = &self.aaaa_response {
            addresses.extend(aaaa.addresses.iter().map(|a| (*a, RecordType::Aaaa)));
        }
        if let Some(a) = &self.a_response {
            addresses.extend(a.addresses.iter().map(|a| (*a, RecordType::A)));
        }
        let plain = addresses
            .iter()
            .map(|(addr, _)| EndpointCandidate::tcp(*addr, self.port));

        let bindings: Vec<&ServiceBinding> = match (&self.svcb_response, config.version) {
            (Some(s), Version::V3) => {
                let mut b: Vec<_> = s.bindings.iter().filter(|b| b.priority > 0).collect();
                b.sort_by_key(|b| b.priority);
                b
            }
            _ => Vec::new(),
        };
        let expanded = bindings
            .into_iter()
            .flat_map(|b| b.expand(&addresses, self.port, RecordType::Https));
        dedup(expanded.chain(plain))
    }

    fn take_fresh(&mut self, config: &HeConfig) -> Vec<EndpointCandidate> {
        let all = self.candidates(config);
        all.into_iter()
            .filter(|c| self.emitted.insert(c.dedup_key()))
            .collect()
    }
}
