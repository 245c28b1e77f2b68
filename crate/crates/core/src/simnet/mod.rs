//! Deterministic discrete-event dual-stack network.
//!
//! A [`Scenario`] says how long each DNS answer and each connection attempt
//! takes. [`run`] hands a [`SimWorld`] to a program (usually
//! [`crate::he::drive`]) and records everything the network saw.

mod clock;
mod scenario;
mod world;

pub use clock::VirtualClock;
pub use scenario::{ConnectBehavior, DnsDelay, Records, Scenario, DEFAULT_HORIZON};
pub use world::{run, SimError, SimRun, SimWorld, REFUSE_LATENCY};

use crate::he::EndpointCandidate;

/// Per-endpoint behavior plus the family delay. Refuse and Blackhole win over
/// any added delay; an unlisted endpoint connects after the family delay
/// alone.
pub fn effective_connect_delay(scenario: &Scenario, candidate: &EndpointCandidate) -> ConnectBehavior {
    let extra = scenario
        .family_delay
        .get(&candidate.family())
        .copied()
        .unwrap_or(0);
    match scenario
        .connect_delays
        .get(&candidate.socket_addr())
        .copied()
        .unwrap_or(ConnectBehavior::Delay(0))
    {
        ConnectBehavior::Delay(d) => ConnectBehavior::Delay(d + extra),
        other => other,
    }
}
