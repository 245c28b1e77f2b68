//! The only boundary between the dialer and the outside world.
//!
//! A world delivers completions one at a time through [`ClockPort::wait`],
//! which is also the only way time moves forward. The simulator in
//! [`crate::simnet`] implements these over a virtual clock; the probe's demo
//! client implements them over real sockets.

use crate::he::{DnsEvent, EndpointCandidate};
use crate::net::{AttemptId, Millis, RecordType};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConnectResult {
    Established,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PortEvent {
    Dns(DnsEvent),
    Connect {
        attempt: AttemptId,
        at: Millis,
        result: ConnectResult,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Wake {
    Event(PortEvent),
    /// The requested deadline was reached with no event due before it.
    Deadline,
    /// Nothing is pending and no deadline was given: nothing will ever
    /// happen again.
    Quiescent,
    /// The world refuses to run any further (simulation horizon).
    Halted,
}

pub trait ClockPort {
    fn now(&self) -> Millis;

    /// Blocks (or advances virtual time) until the next event, or until
    /// `deadline`. Events due exactly at the deadline are delivered before
    /// [`Wake::Deadline`].
    fn wait(&mut self, deadline: Option<Millis>) -> Wake;
}

pub trait ResolverPort {
    fn send_query(&mut self, name: &str, record: RecordType);
}

pub trait TransportPort {
    fn start_attempt(&mut self, attempt: AttemptId, candidate: &EndpointCandidate);

    /// Best effort; a completion for a cancelled attempt must not be
    /// delivered afterwards.
    fn cancel_attempt(&mut self, attempt: AttemptId);
}

/// Everything [`crate::he::drive`] needs.
pub trait World: ClockPort + ResolverPort + TransportPort {}

impl<T: ClockPort + ResolverPort + TransportPort> World for T {}
