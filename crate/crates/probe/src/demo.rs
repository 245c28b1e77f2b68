//! The reference client the probe is validated against, as a standalone
//! program: resolve a URL's host through a given DNS server, dial with a
//! [`ClientProfile`], then fetch the URL over the winning connection.

use std::net::SocketAddr;
use std::time::Duration;

use helab_core::he::Destination;
use helab_core::{EventTimeline, Family, Millis};
use serde::{Deserialize, Serialize};

use crate::client::{run_profile, ClientProfile};
use crate::realworld::{http_get, RealWorld};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemoClientConfig {
    pub profile: ClientProfile,
    pub dns_timeout_ms: Millis,
    pub connect_timeout_ms: Millis,
}

impl Default for DemoClientConfig {
    fn default() -> Self {
        Self { profile: ClientProfile::default(), dns_timeout_ms: 5_000, connect_timeout_ms: 3_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoReport {
    pub ok: bool,
    pub winner: Option<SocketAddr>,
    pub family: Option<Family>,
    pub established_at: Option<Millis>,
    pub http_status: Option<u16>,
    pub body: Option<String>,
    pub error: Option<String>,
    pub timeline: EventTimeline,
}

pub fn run_demo_client(config: &DemoClientConfig, dns: SocketAddr, url: &url::Url) -> anyhow::Result<DemoReport> {
    let host = url.host_str().ok_or_else(|| anyhow::anyhow!("url has no host"))?;
    let port = url.port_or_known_default().ok_or_else(|| anyhow::anyhow!("url has no port"))?;
    let mut world = RealWorld::new(
        dns,
        Duration::from_millis(config.dns_timeout_ms),
        Duration::from_millis(config.connect_timeout_ms),
    );
    let destination = Destination::new(host, port);
    match run_profile(&mut world, &destination, &config.profile) {
        Ok(outcome) => {
            let winner = outcome.winner.as_ref().expect("success has a winner");
            let attempt = outcome
                .attempts
                .first_success()
                .map(|(_, id, _)| id)
                .expect("success is recorded");
            let mut report = DemoReport {
                ok: false,
                winner: Some(winner.socket_addr()),
                family: Some(winner.family()),
                established_at: outcome.established_at,
                http_status: None,
                body: None,
                error: None,
                timeline: outcome.attempts.clone(),
            };
            let Some(mut stream) = world.take_stream(attempt) else {
                report.error = Some("winning stream missing".into());
                return Ok(report);
            };
            let host_header = match url.port() {
                Some(p) => format!("{host}:{p}"),
                None => host.to_string(),
            };
            let path = match url.query() {
                Some(q) => format!("{}?{q}", url.path()),
                None => url.path().to_string(),
            };
            match http_get(&mut stream, &host_header, &path, Duration::from_millis(config.connect_timeout_ms)) {
                Ok((status, body)) => {
                    report.ok = (200..300).contains(&status);
                    report.http_status = Some(status);
                    report.body = Some(body);
                }
                Err(e) => report.error = Some(e.to_string()),
            }
            Ok(report)
        }
        Err(e) => Ok(DemoReport {
            ok: false,
            winner: None,
            family: None,
            established_at: None,
            http_status: None,
            body: None,
            error: Some(e.to_string()),
            timeline: e.timeline().cloned().unwrap_or_default(),
        }),
    }
}
