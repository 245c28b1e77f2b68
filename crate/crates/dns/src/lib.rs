//! Authoritative DNS for Happy Eyeballs measurements.
//!
//! Test names carry their own parameters ([`name`]): how long to hold the
//! answer and for which record type. [`server::Server`] turns a query into a
//! response plus a hold time; [`udp::UdpServer`] puts that on the wire and
//! logs every query it sees. [`zone`] generates the per-delay zones used to
//! measure recursive resolvers.

pub mod name;
pub mod querylog;
pub mod server;
pub mod svcb;
pub mod udp;
pub mod wire;
pub mod zone;

pub use name::{parse_encoded_name, EncodedName, NameError, TargetRecord};
pub use querylog::{QueryLog, QueryLogEntry};
pub use server::{QueryContext, Served, Server, ServerConfig};
pub use udp::UdpServer;
pub use wire::{Message, Name};
pub use zone::{synthesize_resolver_zones, ZoneSpec, ZoneTemplate};
