//! Reference client behaviours the probe can be pointed at.

use std::net::IpAddr;

use helab_core::he::ports::{PortEvent, Wake, World};
use helab_core::he::{drive, race, Destination, DnsPayload, DriveError, EndpointCandidate, HeConfig, HeOutcome};
use helab_core::{EventKind, EventTimeline, Family, RecordType};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientProfile {
    /// The reference dialer.
    HappyEyeballs {
        #[serde(default)]
        he: HeConfig,
    },
    /// Resolves both families, then tries only the first address.
    NoFallback,
    /// Waits for both answers before racing, whichever arrives first.
    WaitsForA {
        #[serde(default)]
        he: HeConfig,
    },
}

impl Default for ClientProfile {
    fn default() -> Self {
        Self::HappyEyeballs { he: HeConfig::default() }
    }
}

pub fn run_profile<W: World>(
    world: &mut W,
    destination: &Destination,
    profile: &ClientProfile,
) -> Result<HeOutcome, DriveError> {
    match profile {
        ClientProfile::HappyEyeballs { he } => drive(world, destination, he),
        ClientProfile::NoFallback => {
            let (mut timeline, addresses) = resolve_both(world, destination);
            let first = addresses.iter().find(|a| a.is_ipv6()).or(addresses.first()).copied();
            let Some(first) = first else {
                return Err(DriveError::ResolutionFailed { timeline });
            };
            let candidate = EndpointCandidate::tcp(first, destination.port);
            prefix(&mut timeline, race(world, destination, vec![candidate], &HeConfig::v2()))
        }
        ClientProfile::WaitsForA { he } => {
            let (mut timeline, addresses) = resolve_both(world, destination);
            if addresses.is_empty() {
                return Err(DriveError::ResolutionFailed { timeline });
            }
            let candidates = addresses.into_iter().map(|a| EndpointCandidate::tcp(a, destination.port)).collect();
            prefix(&mut timeline, race(world, destination, candidates, he))
        }
    }
}

/// Sends AAAA then A and blocks until both have answered or failed.
fn resolve_both<W: World>(world: &mut W, destination: &Destination) -> (EventTimeline, Vec<IpAddr>) {
    let mut timeline = EventTimeline::new();
    for record in [RecordType::Aaaa, RecordType::A] {
        world.send_query(&destination.name, record);
        timeline.push(world.now(), EventKind::DnsQuery { record, name: destination.name.clone() });
    }
    let mut v6 = None;
    let mut v4 = None;
    while v6.is_none() || v4.is_none() {
        let event = match world.wait(None) {
            Wake::Event(PortEvent::Dns(event)) => event,
            Wake::Event(PortEvent::Connect { .. }) | Wake::Deadline => continue,
            Wake::Quiescent | Wake::Halted => break,
        };
        let addresses = match event.payload {
            DnsPayload::Addresses(a) => {
                timeline.push(event.at, EventKind::DnsAnswer { record: event.record_type, addresses: a.clone() });
                a
            }
            DnsPayload::Services(_) => continue,
            DnsPayload::Failed => {
                timeline.push(event.at, EventKind::DnsFailure { record: event.record_type });
                Vec::new()
            }
        };
        match event.record_type.family() {
            Some(Family::V6) => v6 = Some(addresses),
            Some(Family::V4) => v4 = Some(addresses),
            None => {}
        }
    }
    let all = v6.unwrap_or_default().into_iter().chain(v4.unwrap_or_default()).collect();
    (timeline, all)
}

fn prefix(
    resolution: &mut EventTimeline,
    result: Result<HeOutcome, DriveError>,
) -> Result<HeOutcome, DriveError> {
    let mut join = |tail: &EventTimeline| {
        let mut t = std::mem::take(resolution);
        for e in tail.iter() {
            t.push(e.at, e.kind.clone());
        }
        t
    };
    match result {
        Ok(mut outcome) => {
            outcome.attempts = join(&outcome.attempts);
            Ok(outcome)
        }
        Err(DriveError::AllAttemptsFailed { timeline }) => {
            Err(DriveError::AllAttemptsFailed { timeline: join(&timeline) })
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use helab_core::simnet::{run, ConnectBehavior, DnsDelay, Scenario};

    use super::*;

    fn scenario() -> Scenario {
        Scenario::new().with_aaaa(["2001:db8::1".parse().unwrap()]).with_a(["192.0.2.1".parse().unwrap()])
    }

    #[test]
    fn no_fallback_stays_on_ipv6() {
        let s = scenario().with_connect("[2001:db8::1]:443".parse().unwrap(), ConnectBehavior::Blackhole);
        let r = run(&s, |w| run_profile(w, &Destination::new("x.example", 443), &ClientProfile::NoFallback)).unwrap();
        assert!(r.output.is_err());
        assert_eq!(r.timeline.first_attempt(Family::V4), None);
        assert_eq!(r.timeline.first_attempt(Family::V6), Some(0));
    }

    #[test]
    fn waits_for_a_tracks_the_a_answer() {
        let s = scenario().with_dns_delay(RecordType::A, DnsDelay::After(400));
        let profile = ClientProfile::WaitsForA { he: HeConfig::v2() };
        let r = run(&s, |w| run_profile(w, &Destination::new("x.example", 443), &profile)).unwrap();
        let outcome = r.output.unwrap();
        assert_eq!(outcome.attempts.first_attempt(Family::V6), Some(400));
        let normal = run(&s, |w| run_profile(w, &Destination::new("x.example", 443), &ClientProfile::default())).unwrap();
        assert_eq!(normal.timeline.first_attempt(Family::V6), Some(0));
    }
}
