//! Laboratory daemon for browser measurements.
//!
//! Serves a ladder of delay tiers: each tier is a host name whose IPv6 path
//! is delayed by a fixed amount. A browser fetches `/echo` from every tier,
//! and which family answered shows whether its Connection Attempt Delay is
//! above or below the tier delay. Sessions post their observations to
//! `/results`, which stores them and returns the inferred delay interval.

pub mod accept;
pub mod echo;
pub mod inference;
pub mod ladder;
pub mod server;
pub mod shaping;
pub mod store;

pub use accept::{AcceptEvent, AcceptLog};
pub use echo::EchoResponse;
pub use inference::{consistency_score, infer_cad_interval, CadInterval, ConsistencyScore, InferenceError, TierObservation};
pub use ladder::{DelayTier, Ladder, LadderError, DEFAULT_DELAYS};
pub use server::{Labd, LabdConfig};
pub use shaping::{render_command, BlackholeListener, ShapingHook};
pub use store::{Observation, ResultAck, ResultStore, SessionRecord, StoreError, RESULT_SCHEMA_VERSION};
