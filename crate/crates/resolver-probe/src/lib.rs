//! How recursive resolvers choose between IPv6 and IPv4 name servers.
//!
//! [`build_campaign`] makes one zone per delay for dns_lab to serve, each
//! answering IPv6 queries late by its delay. Sending the campaign's names to
//! a resolver and reading dns_lab's query log back as [`ResolverTrace`]s
//! shows, per resolution, which family it tried first, how long it waited
//! on IPv6 and whether it retried; [`classify`] sums that up.

pub mod campaign;
pub mod classify;
pub mod synthetic;
pub mod trace;

pub use campaign::{build_campaign, Campaign, CampaignError};
pub use classify::{classify, render, AaaaQueryBehavior, ClassifyError, ClassifyOptions, ResolverVerdict, TABLE_HEADER};
pub use trace::{traces_from_log, ResolverTrace, TraceEvent};
pub use synthetic::ResolverModel;
