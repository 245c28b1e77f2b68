//! Where a grid point runs: the simulator, or real loopback sockets with
//! dns_lab and labd observing.

use std::collections::BTreeSet;
use std::net::{IpAddr, Ipv4Addr, Ipv6Addr, SocketAddr};
use std::process::ExitStatus;
use std::sync::Arc;
use std::time::{Duration, Instant};

use helab_core::he::Destination;
use helab_core::simnet::{self, ConnectBehavior, DnsDelay, Scenario};
use helab_core::{AttemptId, EventKind, EventTimeline, Family, Millis, RecordType, Transport};
use helab_dns::wire::{rcode, rtype, Name};
use helab_dns::{EncodedName, QueryLog, Server, ServerConfig, TargetRecord, UdpServer};
use helab_labd::{AcceptLog, Labd, LabdConfig, Ladder, ShapingHook};
use thiserror::Error;

use crate::client::{run_profile, ClientProfile};
use crate::plan::{ClientSpec, TargetKind, TestPlan};

pub const BASE_ZONE: &str = "he-test.example.";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("client failed ({status})")]
    ClientFailed { status: String, timeline: EventTimeline },
    #[error("no traffic observed")]
    NoActivity,
    #[error("{0} is not supported by this lab")]
    Unsupported(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// Evidence a failed run still produced.
    pub fn timeline(&self) -> Option<&EventTimeline> {
        match self {
            RunError::ClientFailed { timeline, .. } => Some(timeline),
            _ => None,
        }
    }
}

pub trait Lab {
    /// Whether intermediate delays of `kind` are distinguishable, so a fine
    /// pass makes sense.
    fn graded(&self, kind: TargetKind) -> bool;

    fn run_point(&mut self, plan: &TestPlan, delay_ms: Millis, nonce: &str) -> Result<EventTimeline, RunError>;
}

/// The test name for one point.
pub fn point_name(kind: TargetKind, delay_ms: Millis, nonce: &str) -> String {
    let (delay, record) = match kind {
        TargetKind::Cad | TargetKind::AddressSelection => (0, TargetRecord::None),
        TargetKind::Rd => (delay_ms, TargetRecord::Aaaa),
        TargetKind::RdADelay => (delay_ms, TargetRecord::A),
    };
    let zone = Name::parse(BASE_ZONE).expect("static zone");
    EncodedName::new(delay, record, nonce, zone).render().trim_end_matches('.').to_string()
}

/// In-process runs of a [`ClientProfile`] on the simulator.
#[derive(Debug, Clone)]
pub struct SimLab {
    pub profile: ClientProfile,
    pub base_rtt_ms: Millis,
}

impl SimLab {
    pub fn from_plan(plan: &TestPlan) -> Option<Self> {
        match &plan.client {
            ClientSpec::Simulated { profile, base_rtt_ms } => {
                Some(Self { profile: profile.clone(), base_rtt_ms: *base_rtt_ms })
            }
            ClientSpec::Command { .. } => None,
        }
    }

    pub fn scenario(&self, plan: &TestPlan, delay_ms: Millis) -> Scenario {
        let mut s = plan.network.clone();
        if s.records.a.is_empty() && s.records.aaaa.is_empty() {
            let n = match plan.target_kind {
                TargetKind::AddressSelection => plan.addresses_per_family,
                _ => 1,
            };
            s.records.aaaa = (1..=n as u16).map(|i| Ipv6Addr::new(0x2001, 0xdb8, 0, 0, 0, 0, 0, i)).collect();
            s.records.a = (1..=n as u8).map(|i| Ipv4Addr::new(192, 0, 2, i)).collect();
        }
        let rtt = self.base_rtt_ms;
        let v6_extra = s.family_delay.get(&Family::V6).copied().unwrap_or(0);
        let v4_extra = s.family_delay.get(&Family::V4).copied().unwrap_or(0);
        s = s.with_family_delay(Family::V4, v4_extra + rtt);
        match plan.target_kind {
            TargetKind::Cad => s = s.with_family_delay(Family::V6, v6_extra + rtt + delay_ms),
            TargetKind::Rd => {
                s = s
                    .with_family_delay(Family::V6, v6_extra + rtt)
                    .with_dns_delay(RecordType::Aaaa, DnsDelay::After(delay_ms))
            }
            TargetKind::RdADelay => {
                s = s
                    .with_family_delay(Family::V6, v6_extra + rtt)
                    .with_dns_delay(RecordType::A, DnsDelay::After(delay_ms))
            }
            TargetKind::AddressSelection => {
                let ips: Vec<IpAddr> = s
                    .records
                    .aaaa
                    .iter()
                    .map(|&a| IpAddr::V6(a))
                    .chain(s.records.a.iter().map(|&a| IpAddr::V4(a)))
                    .collect();
                for ip in ips {
                    s = s.with_connect(SocketAddr::new(ip, plan.port), ConnectBehavior::Blackhole);
                }
            }
        }
        s
    }
}

impl Lab for SimLab {
    fn graded(&self, _kind: TargetKind) -> bool {
        true
    }

    fn run_point(&mut self, plan: &TestPlan, delay_ms: Millis, nonce: &str) -> Result<EventTimeline, RunError> {
        let scenario = self.scenario(plan, delay_ms);
        let destination = Destination::new(point_name(plan.target_kind, delay_ms, nonce), plan.port);
        let (ok, timeline) = match simnet::run(&scenario, |w| run_profile(w, &destination, &self.profile)) {
            Ok(r) => (r.output.is_ok(), r.timeline),
            Err(simnet::SimError::HorizonExceeded { timeline }) => (false, timeline),
        };
        if timeline.is_empty() {
            return Err(RunError::NoActivity);
        }
        if ok {
            Ok(timeline)
        } else {
            Err(RunError::ClientFailed { status: "dial failed".into(), timeline })
        }
    }
}

/// dns_lab and labd on loopback, driving an external client command.
///
/// CAD points use a two-tier labd: tier 0 serves both families, tier 1 has a
/// blackholed IPv6 endpoint. User space cannot delay a TCP handshake by a
/// chosen amount, so every positive CAD delay becomes "IPv6 never answers".
pub struct RealLab {
    rt: tokio::runtime::Runtime,
    epoch: Instant,
    dns: UdpServer,
    labd: Labd,
    template: String,
    timeout: Duration,
    reset_hook: Option<String>,
    storage: std::path::PathBuf,
}

impl RealLab {
    pub fn start(template: impl Into<String>, timeout: Duration, reset_hook: Option<String>) -> std::io::Result<Self> {
        let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build()?;
        let epoch = Instant::now();
        let server = Server::new(&ServerConfig::default())
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e))?;
        let dns = rt.block_on(UdpServer::bind(
            &["127.0.0.1:0".parse().expect("literal")],
            Arc::new(server),
            epoch,
            QueryLog::in_memory(),
        ))?;
        let ladder = Ladder::desk_scale(&[0, 1], BASE_ZONE, Ipv4Addr::LOCALHOST, Ipv6Addr::LOCALHOST, 0)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e))?;
        let storage = std::env::temp_dir().join(format!("helab-probe-{}-{}.jsonl", std::process::id(), rand::random::<u32>()));
        let config = LabdConfig {
            ladder,
            listen: "127.0.0.1:0".parse().expect("literal"),
            storage: storage.clone(),
            hook: ShapingHook::Blackhole,
            bind_tiers: true,
        };
        let labd = rt.block_on(Labd::start(config, AcceptLog::new(epoch)))?;
        Ok(Self { rt, epoch, dns, labd, template: template.into(), timeout, reset_hook, storage })
    }

    pub fn from_plan(plan: &TestPlan) -> std::io::Result<Option<Self>> {
        match &plan.client {
            ClientSpec::Command { template, timeout_ms } => {
                Self::start(template.clone(), Duration::from_millis(*timeout_ms), plan.reset_hook.clone()).map(Some)
            }
            ClientSpec::Simulated { .. } => Ok(None),
        }
    }

    pub fn dns_addr(&self) -> SocketAddr {
        self.dns.local_addrs()[0]
    }

    pub fn ladder(&self) -> &Ladder {
        self.labd.ladder()
    }

    fn now_ms(&self) -> Millis {
        self.epoch.elapsed().as_millis() as Millis
    }

    pub fn render(&self, name: &str, port: u16, nonce: &str) -> String {
        let url = format!("http://{name}:{port}/echo?nonce={nonce}");
        self.template
            .replace("{url}", &url)
            .replace("{dns}", &self.dns_addr().to_string())
            .replace("{name}", name)
            .replace("{port}", &port.to_string())
            .replace("{nonce}", nonce)
    }

    /// Server-side view of one run: queries for this nonce and accepts on
    /// the tier's port since `from_ms`.
    fn observe(&self, from_ms: Millis, nonce: &str, port: u16) -> EventTimeline {
        let mut timeline = EventTimeline::new();
        let config = ServerConfig::default();
        for q in self.dns.log().since(from_ms).into_iter().filter(|q| q.qname.contains(nonce)) {
            let record = match q.qtype {
                rtype::A => RecordType::A,
                rtype::AAAA => RecordType::Aaaa,
                rtype::HTTPS => RecordType::Https,
                _ => continue,
            };
            timeline.push(q.at_ms, EventKind::DnsQuery { record, name: q.qname.clone() });
            let kind = if q.rcode == rcode::NOERROR {
                let addresses = match record {
                    RecordType::A => config.v4.iter().map(|&a| IpAddr::V4(a)).collect(),
                    RecordType::Aaaa => config.v6.iter().map(|&a| IpAddr::V6(a)).collect(),
                    _ => Vec::new(),
                };
                EventKind::DnsAnswer { record, addresses }
            } else {
                EventKind::DnsFailure { record }
            };
            timeline.push(q.respond_at_ms(), kind);
        }
        let accepts = self.labd.accepts().since(from_ms);
        for (i, a) in accepts.iter().filter(|a| a.local.port() == port).enumerate() {
            let attempt = AttemptId(i as u32);
            timeline.push(
                a.at_ms,
                EventKind::AttemptStarted { attempt, family: a.family, endpoint: a.local, transport: Transport::Tcp },
            );
            timeline.push(a.at_ms, EventKind::AttemptSucceeded { attempt });
        }
        timeline.sort();
        timeline
    }
}

impl Lab for RealLab {
    fn graded(&self, kind: TargetKind) -> bool {
        kind != TargetKind::Cad
    }

    fn run_point(&mut self, plan: &TestPlan, delay_ms: Millis, nonce: &str) -> Result<EventTimeline, RunError> {
        let tier = match plan.target_kind {
            TargetKind::AddressSelection => return Err(RunError::Unsupported("address selection")),
            TargetKind::Cad if delay_ms > 0 => 1,
            _ => 0,
        };
        let port = self.ladder().tiers[tier].v4_endpoint.port();
        let name = point_name(plan.target_kind, delay_ms, nonce);
        let command = self.render(&name, port, nonce);
        let from = self.now_ms();
        let timeout = self.timeout;
        let status = self.rt.block_on(async {
            let child = tokio::process::Command::new("sh")
                .arg("-c")
                .arg(&command)
                .stdout(std::process::Stdio::null())
                .kill_on_drop(true)
                .status();
            tokio::time::timeout(timeout, child).await
        });
        // Late log entries (held DNS answers) land within a few ms.
        std::thread::sleep(Duration::from_millis(20));
        let timeline = self.observe(from, nonce, port);
        if let Some(hook) = &self.reset_hook {
            std::process::Command::new("sh").arg("-c").arg(hook).status()?;
        }
        let status: Result<ExitStatus, String> = match status {
            Ok(Ok(s)) if s.success() => Ok(s),
            Ok(Ok(s)) => Err(s.to_string()),
            Ok(Err(e)) => return Err(e.into()),
            Err(_) => Err("timed out".into()),
        };
        match status {
            Ok(_) if timeline.is_empty() => Err(RunError::NoActivity),
            Ok(_) => Ok(timeline),
            Err(status) => Err(RunError::ClientFailed { status, timeline }),
        }
    }
}

impl Drop for RealLab {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.storage);
    }
}

/// Distinct endpoints attempted per family, in first-attempt order.
pub fn attempted_endpoints(timeline: &EventTimeline) -> (BTreeSet<SocketAddr>, BTreeSet<SocketAddr>) {
    let mut v4 = BTreeSet::new();
    let mut v6 = BTreeSet::new();
    for (_, _, family, endpoint) in timeline.attempts() {
        match family {
            Family::V4 => v4.insert(endpoint),
            Family::V6 => v6.insert(endpoint),
        };
    }
    (v4, v6)
}
