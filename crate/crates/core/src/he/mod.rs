//! Happy Eyeballs v1/v2/v3 as one configurable, clock-driven state machine.
//!
//! The pieces compose in the order a dialer uses them:
//!
//! 1. [`ResolutionState::on_dns_event`] decides when enough of the AAAA/A
//!    (and, for v3, HTTPS) answers are in to start connecting, arming the
//!    Resolution Delay when A wins the race.
//! 2. [`sort_and_interlace`] orders the candidates by family preference, First
//!    Address Family Count and, for v3, protocol preference.
//! 3. [`build_schedule`] staggers launches by the Connection Attempt Delay.
//! 4. [`drive`] runs all of the above against a [`ports::World`], cancelling
//!    the losers once one attempt succeeds.

mod cache;
mod candidate;
mod config;
mod driver;
mod error;
mod interlace;
pub mod ports;
mod resolution;
mod schedule;
mod svcb;

pub use cache::{CacheEntry, ResultCache};
pub use candidate::EndpointCandidate;
pub use config::{
    HeConfig, Interleave, ProtocolFeature, Version, DEFAULT_CACHE_TTL_SECS,
    DEFAULT_CONNECTION_ATTEMPT_DELAY, DEFAULT_FIRST_ADDRESS_FAMILY_COUNT,
    DEFAULT_RESOLUTION_DELAY, MAX_CONNECTION_ATTEMPT_DELAY, MIN_CONNECTION_ATTEMPT_DELAY,
    RECOMMENDED_MIN_CONNECTION_ATTEMPT_DELAY, V1_CONNECTION_ATTEMPT_DELAY_RANGE,
};
pub use driver::{drive, race, Destination, Dialer, DriveError, HeOutcome};
pub use error::HeError;
pub use interlace::sort_and_interlace;
pub use resolution::{Action, DnsEvent, DnsPayload, RecordResponse, ResolutionState};
pub use schedule::{build_schedule, AttemptSchedule, ScheduledAttempt};
pub use svcb::ServiceBinding;
