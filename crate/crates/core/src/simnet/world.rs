use std::collections::HashSet;
use std::net::IpAddr;

use thiserror::Error;

use super::clock::VirtualClock;
use super::scenario::{ConnectBehavior, DnsDelay, Scenario};
use super::effective_connect_delay;
use crate::he::ports::{ClockPort, ConnectResult, PortEvent, ResolverPort, TransportPort, Wake};
use crate::he::{DnsEvent, DnsPayload, EndpointCandidate};
use crate::net::{AttemptId, Millis, RecordType};
use crate::timeline::{EventKind, EventTimeline};

/// Time for a refused attempt's RST to come back.
pub const REFUSE_LATENCY: Millis = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("simulation horizon exceeded with events still pending")]
    HorizonExceeded { timeline: EventTimeline },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimRun<T> {
    pub output: T,
    /// What the network observed: queries, answers and attempts.
    pub timeline: EventTimeline,
}

#[derive(Debug, Clone)]
enum SimEvent {
    Dns(DnsEvent),
    Connect { attempt: AttemptId, result: ConnectResult },
}

#[derive(Debug)]
pub struct SimWorld {
    scenario: Scenario,
    clock: VirtualClock<SimEvent>,
    timeline: EventTimeline,
    cancelled: HashSet<AttemptId>,
    halted: bool,
}

impl SimWorld {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            clock: VirtualClock::new(),
            timeline: EventTimeline::new(),
            cancelled: HashSet::new(),
            halted: false,
        }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn timeline(&self) -> &EventTimeline {
        &self.timeline
    }

    pub fn is_halted(&self) -> bool {
        self.halted
    }

    pub fn into_timeline(self) -> EventTimeline {
        self.timeline
    }

    fn answer(&self, record: RecordType) -> DnsPayload {
        let records = &self.scenario.records;
        match record {
            RecordType::A => {
                DnsPayload::Addresses(records.a.iter().copied().map(IpAddr::V4).collect())
            }
            RecordType::Aaaa => {
                DnsPayload::Addresses(records.aaaa.iter().copied().map(IpAddr::V6).collect())
            }
            RecordType::Https | RecordType::Svcb => DnsPayload::Services(records.https.clone()),
        }
    }

    fn halt(&mut self) -> Wake {
        self.halted = true;
        Wake::Halted
    }
}

impl ClockPort for SimWorld {
    fn now(&self) -> Millis {
        self.clock.now()
    }

    fn wait(&mut self, deadline: Option<Millis>) -> Wake {
        if self.halted {
            return Wake::Halted;
        }
        loop {
            match self.clock.peek_time() {
                Some(t) if deadline.is_none_or(|d| t <= d) => {
                    if t > self.scenario.horizon {
                        return self.halt();
                    }
                    let (at, event) = self.clock.pop().expect("peeked");
                    match event {
                        SimEvent::Dns(dns) => {
                            let kind = match &dns.payload {
                                DnsPayload::Addresses(a) => EventKind::DnsAnswer {
                                    record: dns.record_type,
                                    addresses: a.clone(),
                                },
                                DnsPayload::Services(s) => EventKind::DnsAnswer {
                                    record: dns.record_type,
                                    addresses: s.iter().flat_map(|b| b.hints()).collect(),
                                },
                                DnsPayload::Failed => EventKind::DnsFailure {
                                    record: dns.record_type,
                                },
                            };
                            self.timeline.push(at, kind);
                            return Wake::Event(PortEvent::Dns(dns));
                        }
                        SimEvent::Connect { attempt, result } => {
                            if self.cancelled.contains(&attempt) {
                                continue;
                            }
                            let kind = match result {
                                ConnectResult::Established => EventKind::AttemptSucceeded { attempt },
                                ConnectResult::Failed => EventKind::AttemptFailed { attempt },
                            };
                            self.timeline.push(at, kind);
                            return Wake::Event(PortEvent::Connect { attempt, at, result });
                        }
                    }
                }
                _ => {
                    return match deadline {
                        Some(d) if d > self.scenario.horizon => self.halt(),
                        Some(d) => {
                            self.clock.advance_to(d);
                            Wake::Deadline
                        }
                        None => Wake::Quiescent,
                    };
                }
            }
        }
    }
}

impl ResolverPort for SimWorld {
    fn send_query(&mut self, name: &str, record: RecordType) {
        let now = self.clock.now();
        self.timeline.push(
            now,
            EventKind::DnsQuery {
                record,
                name: name.to_string(),
            },
        );
        if let DnsDelay::After(delay) = self.scenario.dns_delay(record) {
            let event = DnsEvent {
                record_type: record,
                at: now + delay,
                payload: self.answer(record),
            };
            self.clock.schedule_in(delay, SimEvent::Dns(event));
        }
    }
}

impl TransportPort for SimWorld {
    fn start_attempt(&mut self, attempt: AttemptId, candidate: &EndpointCandidate) {
        // A later drive on the same world may reuse ids.
        self.cancelled.remove(&attempt);
        let now = self.clock.now();
        self.timeline.push(
            now,
            EventKind::AttemptStarted {
                attempt,
                family: candidate.family(),
                endpoint: candidate.socket_addr(),
                transport: candidate.transport(),
            },
        );
        let (delay, result) = match effective_connect_delay(&self.scenario, candidate) {
            ConnectBehavior::Delay(d) => (d, ConnectResult::Established),
            ConnectBehavior::Refuse => (REFUSE_LATENCY, ConnectResult::Failed),
            ConnectBehavior::Blackhole => return,
        };
        self.clock
            .schedule_in(delay, SimEvent::Connect { attempt, result });
    }

    fn cancel_attempt(&mut self, attempt: AttemptId) {
        if self.cancelled.insert(attempt) {
            let now = self.clock.now();
            self.timeline
                .push(now, EventKind::AttemptCancelled { attempt });
            self.clock
                .retain(|e| !matches!(e, SimEvent::Connect { attempt: a, .. } if *a == attempt));
        }
    }
}

/// Runs `program` against a fresh world built from `scenario`.
///
/// ```
/// use helab_core::simnet::{run, Scenario};
///
/// let r = run(&Scenario::new(), |_| ()).unwrap();
/// assert!(r.timeline.is_empty());
/// ```
pub fn run<T>(scenario: &Scenario, program: impl FnOnce(&mut SimWorld) -> T) -> Result<SimRun<T>, SimError> {
    let mut world = SimWorld::new(scenario.clone());
    let output = program(&mut world);
    if world.halted {
        return Err(SimError::HorizonExceeded {
            timeline: world.timeline,
        });
    }
    Ok(SimRun {
        output,
        timeline: world.timeline,
    })
}
