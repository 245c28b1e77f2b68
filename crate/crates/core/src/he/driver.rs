use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::cache::{CacheEntry, ResultCache};
use super::candidate::EndpointCandidate;
use super::config::{HeConfig, Version};
use super::error::HeError;
use super::interlace::sort_and_interlace;
use super::ports::{ConnectResult, PortEvent, Wake, World};
use super::resolution::{Action, DnsEvent, DnsPayload, ResolutionState};
use super::schedule::truncate_for_version;
use crate::net::{AttemptId, Millis, RecordType};
use crate::timeline::{EventKind, EventTimeline};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Destination {
    pub name: String,
    pub port: u16,
}

impl Destination {
    pub fn new(name: impl Into<String>, port: u16) -> Self {
        Self {
            name: name.into(),
            port,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeOutcome {
    pub winner: Option<EndpointCandidate>,
    pub established_at: Option<Millis>,
    pub attempts: EventTimeline,
    pub cache_entry: Option<CacheEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DriveError {
    #[error("invalid configuration: {0}")]
    Config(#[source] HeError),
    #[error("destination name is empty")]
    EmptyDestination,
    #[error("all connection attempts failed")]
    AllAttemptsFailed { timeline: EventTimeline },
    #[error("resolution failed for both address families")]
    ResolutionFailed { timeline: EventTimeline },
}

impl DriveError {
    pub fn timeline(&self) -> Option<&EventTimeline> {
        match self {
            DriveError::AllAttemptsFailed { timeline } | DriveError::ResolutionFailed { timeline } => {
                Some(timeline)
            }
            _ => None,
        }
    }
}

/// Resolves `destination` and races connection attempts until one succeeds.
///
/// AAAA is queried first, A immediately after, and HTTPS as well under v3.
/// The returned timeline covers every query, answer, timer and attempt, and
/// is also carried by the error variants.
pub fn drive<W: World>(
    world: &mut W,
    destination: &Destination,
    config: &HeConfig,
) -> Result<HeOutcome, DriveError> {
    config.validate().map_err(DriveError::Config)?;
    if destination.name.is_empty() {
        return Err(DriveError::EmptyDestination);
    }
    let mut session = Session::new(world, destination, config, Some(ResolutionState::new(destination.port)));
    let mut queries = vec![RecordType::Aaaa, RecordType::A];
    if config.version == Version::V3 {
        queries.push(RecordType::Https);
    }
    for record in queries {
        session.world.send_query(&destination.name, record);
        let now = session.world.now();
        session.timeline.push(
            now,
            EventKind::DnsQuery {
                record,
                name: destination.name.clone(),
            },
        );
    }
    session.run()
}

/// Races an already resolved candidate list; no DNS involved.
pub fn race<W: World>(
    world: &mut W,
    destination: &Destination,
    candidates: Vec<EndpointCandidate>,
    config: &HeConfig,
) -> Result<HeOutcome, DriveError> {
    config.validate().map_err(DriveError::Config)?;
    if candidates.is_empty() {
        return Err(DriveError::Config(HeError::EmptyCandidateSet));
    }
    let mut session = Session::new(world, destination, config, None);
    session.merge(candidates);
    session.run()
}

/// A dialer that consults and fills a [`ResultCache`].
#[derive(Debug, Clone)]
pub struct Dialer {
    pub config: HeConfig,
    pub cache: ResultCache,
}

impl Dialer {
    pub fn new(config: HeConfig) -> Self {
        Self {
            config,
            cache: ResultCache::new(),
        }
    }

    /// Tries the cached winner alone first; on a miss or failure falls back
    /// to a full [`drive`].
    pub fn connect<W: World>(
        &mut self,
        world: &mut W,
        destination: &Destination,
    ) -> Result<HeOutcome, DriveError> {
        let now = world.now();
        if let Some(cached) = self.cache.lookup(&destination.name, now).cloned() {
            if let Ok(outcome) = race(world, destination, vec![cached], &self.config) {
                return Ok(outcome);
            }
        }
        let outcome = drive(world, destination, &self.config)?;
        if let Some(entry) = &outcome.cache_entry {
            self.cache.insert(entry.clone());
        }
        Ok(outcome)
    }
}

struct Session<'a, W> {
    world: &'a mut W,
    destination: &'a Destination,
    config: &'a HeConfig,
    timeline: EventTimeline,
    resolution: Option<ResolutionState>,
    rd_deadline: Option<Millis>,
    known: Vec<EndpointCandidate>,
    queue: Vec<EndpointCandidate>,
    launched: Vec<(AttemptId, EndpointCandidate)>,
    in_flight: BTreeSet<AttemptId>,
    next_launch_at: Option<Millis>,
    last_launch_at: Option<Millis>,
}

enum Step {
    Continue,
    Done(Result<HeOutcome, DriveError>),
}

impl<'a, W: World> Session<'a, W> {
    fn new(
        world: &'a mut W,
        destination: &'a Destination,
        config: &'a HeConfig,
        resolution: Option<ResolutionState>,
    ) -> Self {
        Self {
            world,
            destination,
            config,
            timeline: EventTimeline::new(),
            resolution,
            rd_deadline: None,
            known: Vec::new(),
            queue: Vec::new(),
            launched: Vec::new(),
            in_flight: BTreeSet::new(),
            next_launch_at: None,
            last_launch_at: None,
        }
    }

    fn run(mut self) -> Result<HeOutcome, DriveError> {
        loop {
            let deadline = match (self.rd_deadline, self.next_launch_at) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            };
            let step = match self.world.wait(deadline) {
                Wake::Event(PortEvent::Dns(event)) => self.on_dns(event),
                Wake::Event(PortEvent::Connect { attempt, at, result }) => {
                    self.on_connect(attempt, at, result)
                }
                Wake::Deadline => self.on_deadline(),
                Wake::Quiescent => self.on_quiescent(),
                Wake::Halted => Step::Done(Err(self.all_failed())),
            };
            if let Step::Done(result) = step {
                return result;
            }
            if self.exhausted() {
                return Err(self.all_failed());
            }
        }
    }

    fn now(&self) -> Millis {
        self.world.now()
    }

    fn on_dns(&mut self, event: DnsEvent) -> Step {
        let Some(resolution) = self.resolution.as_mut() else {
            return Step::Continue;
        };
        let kind = match &event.payload {
            DnsPayload::Addresses(a) => EventKind::DnsAnswer {
                record: event.record_type,
                addresses: a.clone(),
            },
            DnsPayload::Services(s) => EventKind::DnsAnswer {
                record: event.record_type,
                addresses: s.iter().flat_map(|b| b.hints()).collect(),
            },
            DnsPayload::Failed => EventKind::DnsFailure {
                record: event.record_type,
            },
        };
        self.timeline.push(event.at, kind);
        match resolution.on_dns_event(event, self.config) {
            Ok(action) => self.apply(action),
            Err(HeError::ResolutionFailed) => Step::Done(Err(DriveError::ResolutionFailed {
                timeline: std::mem::take(&mut self.timeline),
            })),
            // Duplicates and malformed answers are dropped.
            Err(_) => Step::Continue,
        }
    }

    fn apply(&mut self, action: Action) -> Step {
        match action {
            Action::StartConnecting(c) | Action::AddCandidates(c) => {
                self.rd_deadline = None;
                if !c.is_empty() {
                    self.merge(c);
                }
            }
            Action::Wait(deadline) => {
                if self.rd_deadline != Some(deadline) {
                    self.rd_deadline = Some(deadline);
                    let now = self.now();
                    self.timeline
                        .push(now, EventKind::ResolutionDelayArmed { deadline });
                }
            }
            Action::Pending => {}
        }
        Step::Continue
    }

    /// Re-interlaces everything known so far and queues whatever has not
    /// been launched yet.
    fn merge(&mut self, fresh: Vec<EndpointCandidate>) {
        self.known.extend(fresh);
        let Ok(ordered) = sort_and_interlace(&self.known, self.config) else {
            return;
        };
        let ordered = truncate_for_version(&ordered, self.config);
        let launched: HashSet<_> = self.launched.iter().map(|(_, c)| c.dedup_key()).collect();
        self.queue = ordered
            .into_iter()
            .filter(|c| !launched.contains(&c.dedup_key()))
            .collect();
        if self.next_launch_at.is_none() && !self.queue.is_empty() {
            let now = self.now();
            let cad = self.config.effective_cad();
            self.next_launch_at = Some(match self.last_launch_at {
                Some(last) => now.max(last + cad),
                None => now,
            });
        }
    }

    fn on_connect(&mut self, attempt: AttemptId, at: Millis, result: ConnectResult) -> Step {
        if !self.in_flight.remove(&attempt) {
            return Step::Continue;
        }
        match result {
            ConnectResult::Established => {
                self.timeline.push(at, EventKind::AttemptSucceeded { attempt });
                Step::Done(Ok(self.finish(attempt, at)))
            }
            ConnectResult::Failed => {
                self.timeline.push(at, EventKind::AttemptFailed { attempt });
                // A failed attempt frees its slot: move on without waiting
                // out the rest of the delay.
                if !self.queue.is_empty() {
                    self.next_launch_at = Some(self.now());
                }
                Step::Continue
            }
        }
    }

    fn finish(&mut self, attempt: AttemptId, at: Millis) -> HeOutcome {
        for other in std::mem::take(&mut self.in_flight) {
            self.world.cancel_attempt(other);
            self.timeline
                .push(at, EventKind::AttemptCancelled { attempt: other });
        }
        self.queue.clear();
        self.next_launch_at = None;
        let winner = self
            .launched
            .iter()
            .find(|(id, _)| *id == attempt)
            .map(|(_, c)| c.clone())
            .expect("winner was launched");
        let cache_entry = CacheEntry {
            destination: self.destination.name.clone(),
            winner: winner.clone(),
            expires_at: at + self.config.result_cache_ttl_ms(),
        };
        HeOutcome {
            winner: Some(winner),
            established_at: Some(at),
            attempts: std::mem::take(&mut self.timeline),
            cache_entry: Some(cache_entry),
        }
    }

    fn on_deadline(&mut self) -> Step {
        let now = self.now();
        if let Some(deadline) = self.rd_deadline {
            if now >= deadline {
                self.rd_deadline = None;
                self.timeline.push(now, EventKind::ResolutionDelayExpired);
                if let Some(resolution) = self.resolution.as_mut() {
                    let action = resolution.on_timer(now, self.config);
                    self.apply(action);
                }
            }
        }
        if self.next_launch_at.is_some_and(|t| now >= t) {
            self.launch_next(now);
        }
        Step::Continue
    }

    fn launch_next(&mut self, now: Millis) {
        if self.queue.is_empty() {
            self.next_launch_at = None;
            return;
        }
        let candidate = self.queue.remove(0);
        let attempt = AttemptId(self.launched.len() as u32);
        self.world.start_attempt(attempt, &candidate);
        self.timeline.push(
            now,
            EventKind::AttemptStarted {
                attempt,
                family: candidate.family(),
                endpoint: candidate.socket_addr(),
                transport: candidate.transport(),
            },
        );
        self.in_flight.insert(attempt);
        self.launched.push((attempt, candidate));
        self.last_launch_at = Some(now);
        self.next_launch_at = if self.queue.is_empty() {
            None
        } else {
            Some(now + self.config.effective_cad())
        };
    }

    /// Nothing will ever arrive again: outstanding queries are treated as
    /// resolver failures so the state machine can still make progress.
    fn on_quiescent(&mut self) -> Step {
        let now = self.now();
        let pending = match &self.resolution {
            Some(r) => r.pending_records(self.config),
            None => Vec::new(),
        };
        if pending.is_empty() {
            return Step::Done(Err(self.all_failed()));
        }
        for record in pending {
            if let Step::Done(result) = self.on_dns(DnsEvent::failed(record, now)) {
                return Step::Done(result);
            }
        }
        Step::Continue
    }

    fn exhausted(&self) -> bool {
        let resolving = self
            .resolution
            .as_ref()
            .is_some_and(|r| !r.pending_records(self.config).is_empty());
        !resolving
            && self.rd_deadline.is_none()
            && self.in_flight.is_empty()
            && self.queue.is_empty()
    }

    fn all_failed(&mut self) -> DriveError {
        let now = self.now();
        for attempt in std::mem::take(&mut self.in_flight) {
            self.world.cancel_attempt(attempt);
            self.timeline.push(now, EventKind::AttemptCancelled { attempt });
        }
        DriveError::AllAttemptsFailed {
            timeline: std::mem::take(&mut self.timeline),
        }
    }
}
