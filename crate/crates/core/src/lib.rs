//! Happy Eyeballs laboratory core.
//!
//! [`he`] holds a deterministic reference implementation of Happy Eyeballs
//! v1 (RFC 6555), v2 (RFC 8305) and the v3 draft as one configurable state
//! machine. It talks to the outside world only through the ports in
//! [`he::ports`], so the same code drives a simulated network ([`simnet`])
//! and real sockets.
//!
//! Every run produces an [`EventTimeline`]: the ordered, timestamped record of
//! DNS queries, answers and connection attempts that the measurement tooling
//! analyzes.

pub mod he;
pub mod net;
pub mod simnet;
pub mod timeline;

pub use net::{AttemptId, Family, Millis, RecordType, Transport};
pub use timeline::{EventKind, EventTimeline, TimelineEvent};
