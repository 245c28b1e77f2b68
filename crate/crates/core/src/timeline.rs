//! Ordered record of resolution events and connection attempts.

use std::net::{IpAddr, SocketAddr};

use serde::{Deserialize, Serialize};

use crate::net::{AttemptId, Family, Millis, RecordType, Transport};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EventKind {
    DnsQuery {
        record: RecordType,
        name: String,
    },
    /// A positive or empty answer. For service binding records the addresses
    /// are the ipv4/ipv6 hints.
    DnsAnswer {
        record: RecordType,
        addresses: Vec<IpAddr>,
    },
    DnsFailure {
        record: RecordType,
    },
    ResolutionDelayArmed {
        deadline: Millis,
    },
    ResolutionDelayExpired,
    AttemptStarted {
        attempt: AttemptId,
        family: Family,
        endpoint: SocketAddr,
        transport: Transport,
    },
    AttemptSucceeded {
        attempt: AttemptId,
    },
    AttemptFailed {
        attempt: AttemptId,
    },
    AttemptCancelled {
        attempt: AttemptId,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineEvent {
    pub at: Millis,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// Timestamped events in nondecreasing time order. Events sharing a timestamp
/// keep the order in which they were recorded.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventTimeline {
    events: Vec<TimelineEvent>,
}

impl EventTimeline {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends an event. Out-of-order timestamps are allowed here so that
    /// observations merged from several logs can be collected first and
    /// ordered afterwards with [`EventTimeline::sort`].
    pub fn push(&mut self, at: Millis, kind: EventKind) {
        self.events.push(TimelineEvent { at, kind });
    }

    /// Stable sort by timestamp.
    pub fn sort(&mut self) {
        self.events.sort_by_key(|e| e.at);
    }

    pub fn is_sorted(&self) -> bool {
        self.events.windows(2).all(|w| w[0].at <= w[1].at)
    }

    pub fn events(&self) -> &[TimelineEvent] {
        &self.events
    }

    pub fn iter(&self) -> impl Iterator<Item = &TimelineEvent> {
        self.events.iter()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Every `AttemptStarted` in order: (timestamp, attempt, family, endpoint).
    pub fn attempts(&self) -> impl Iterator<Item = (Millis, AttemptId, Family, SocketAddr)> + '_ {
        self.events.iter().filter_map(|e| match e.kind {
            EventKind::AttemptStarted {
                attempt,
                family,
                endpoint,
                ..
            } => Some((e.at, attempt, family, endpoint)),
            _ => None,
        })
    }

    pub fn first_attempt(&self, family: Family) -> Option<Millis> {
        self.attempts()
            .find(|(_, _, f, _)| *f == family)
            .map(|(at, ..)| at)
    }

    /// The attempt that succeeded first, with its family and timestamp.
    pub fn first_success(&self) -> Option<(Millis, AttemptId, Family)> {
        let winner = self.events.iter().find_map(|e| match e.kind {
            EventKind::AttemptSucceeded { attempt } => Some((e.at, attempt)),
            _ => None,
        })?;
        let family = self
            .attempts()
            .find(|(_, id, ..)| *id == winner.1)
            .map(|(_, _, f, _)| f)?;
        Some((winner.0, winner.1, family))
    }

    pub fn first_query(&self, record: RecordType) -> Option<Millis> {
        self.events.iter().find_map(|e| match &e.kind {
            EventKind::DnsQuery { record: r, .. } if *r == record => Some(e.at),
            _ => None,
        })
    }

    /// Time of the first answer or failure for `record`.
    pub fn first_response(&self, record: RecordType) -> Option<Millis> {
        self.events.iter().find_map(|e| match &e.kind {
            EventKind::DnsAnswer { record: r, .. } | EventKind::DnsFailure { record: r }
                if *r == record =>
            {
                Some(e.at)
            }
            _ => None,
        })
    }

    /// One JSON document per line.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for event in &self.events {
            out.push_str(&serde_json::to_string(event).expect("timeline events serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_json_lines(input: &str) -> Result<Self, serde_json::Error> {
        let events = input
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { events })
    }
}

impl FromIterator<TimelineEvent> for EventTimeline {
    fn from_iter<I: IntoIterator<Item = TimelineEvent>>(iter: I) -> Self {
        Self {
            events: iter.into_iter().collect(),
        }
    }
}

impl Extend<TimelineEvent> for EventTimeline {
    fn extend<I: IntoIterator<Item = TimelineEvent>>(&mut self, iter: I) {
        self.events.extend(iter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn started(id: u32, family: Family, ep: &str) -> EventKind {
        EventKind::AttemptStarted {
            attempt: AttemptId(id),
            family,
            endpoint: ep.parse().unwrap(),
            transport: Transport::Tcp,
        }
    }

    #[test]
    fn json_lines_round_trip() {
        let mut t = EventTimeline::new();
        t.push(
            0,
            EventKind::DnsQuery {
                record: RecordType::Aaaa,
                name: "example.test".into(),
            },
        );
        t.push(3, started(0, Family::V6, "[2001:db8::1]:443"));
        t.push(250, started(1, Family::V4, "192.0.2.1:443"));
        t.push(260, EventKind::AttemptSucceeded { attempt: AttemptId(1) });
        let text = t.to_json_lines();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with(r#"{"at":0,"event":"dns_query","record":"AAAA""#));
        assert_eq!(EventTimeline::from_json_lines(&text).unwrap(), t);
    }

    #[test]
    fn helpers_find_first_events() {
        let mut t = EventTimeline::new();
        t.push(3, started(0, Family::V6, "[2001:db8::1]:443"));
        t.push(250, started(1, Family::V4, "192.0.2.1:443"));
        t.push(260, EventKind::AttemptSucceeded { attempt: AttemptId(1) });
        assert_eq!(t.first_attempt(Family::V6), Some(3));
        assert_eq!(t.first_attempt(Family::V4), Some(250));
        assert_eq!(t.first_success(), Some((260, AttemptId(1), Family::V4)));
    }

    #[test]
    fn sort_is_stable() {
        let mut t = EventTimeline::new();
        t.push(5, EventKind::ResolutionDelayExpired);
        t.push(1, started(0, Family::V6, "[::1]:1"));
        t.push(1, started(1, Family::V4, "127.0.0.1:1"));
        t.sort();
        assert!(t.is_sorted());
        let ids: Vec<_> = t.attempts().map(|a| a.1 .0).collect();
        assert_eq!(ids, vec![0, 1]);
    }
}
