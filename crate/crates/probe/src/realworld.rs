//! The dialer's ports over real sockets: one thread per DNS query and per
//! connection attempt, completions funnelled through a channel.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream, UdpSocket};
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError, Sender, TryRecvError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use helab_core::he::ports::{ClockPort, ConnectResult, PortEvent, ResolverPort, TransportPort, Wake};
use helab_core::he::{DnsEvent, DnsPayload, EndpointCandidate};
use helab_core::{AttemptId, Millis, RecordType};
use helab_dns::wire::{rcode, rtype, Message, Name, RData};

pub struct RealWorld {
    epoch: Instant,
    dns_server: SocketAddr,
    dns_timeout: Duration,
    connect_timeout: Duration,
    tx: Sender<PortEvent>,
    rx: Receiver<PortEvent>,
    outstanding: usize,
    cancelled: HashSet<AttemptId>,
    streams: Arc<Mutex<HashMap<AttemptId, TcpStream>>>,
    next_id: u16,
}

impl RealWorld {
    pub fn new(dns_server: SocketAddr, dns_timeout: Duration, connect_timeout: Duration) -> Self {
        let (tx, rx) = channel();
        Self {
            epoch: Instant::now(),
            dns_server,
            dns_timeout,
            connect_timeout,
            tx,
            rx,
            outstanding: 0,
            cancelled: HashSet::new(),
            streams: Arc::default(),
            next_id: rand::random(),
        }
    }

    /// The established stream of a successful attempt.
    pub fn take_stream(&mut self, attempt: AttemptId) -> Option<TcpStream> {
        self.streams.lock().expect("stream map poisoned").remove(&attempt)
    }

    fn deliver(&mut self, event: PortEvent) -> Option<Wake> {
        self.outstanding = self.outstanding.saturating_sub(1);
        if let PortEvent::Connect { attempt, .. } = &event {
            if self.cancelled.contains(attempt) {
                self.take_stream(*attempt);
                return None;
            }
        }
        Some(Wake::Event(event))
    }
}

impl ClockPort for RealWorld {
    fn now(&self) -> Millis {
        self.epoch.elapsed().as_millis() as Millis
    }

    fn wait(&mut self, deadline: Option<Millis>) -> Wake {
        loop {
            let event = match deadline {
                Some(d) => {
                    let target = self.epoch + Duration::from_millis(d);
                    match self.rx.try_recv() {
                        Ok(e) => e,
                        Err(TryRecvError::Disconnected) => unreachable!("world holds a sender"),
                        Err(TryRecvError::Empty) => {
                            let left = target.saturating_duration_since(Instant::now());
                            match self.rx.recv_timeout(left) {
                                Ok(e) => e,
                                Err(RecvTimeoutError::Timeout) => return Wake::Deadline,
                                Err(RecvTimeoutError::Disconnected) => unreachable!("world holds a sender"),
                            }
                        }
                    }
                }
                None if self.outstanding == 0 => return Wake::Quiescent,
                None => self.rx.recv().expect("world holds a sender"),
            };
            if let Some(wake) = self.deliver(event) {
                return wake;
            }
        }
    }
}

impl ResolverPort for RealWorld {
    fn send_query(&mut self, name: &str, record: RecordType) {
        let qtype = match record {
            RecordType::A => rtype::A,
            RecordType::Aaaa => rtype::AAAA,
            RecordType::Https => rtype::HTTPS,
            RecordType::Svcb => rtype::SVCB,
        };
        let id = self.next_id;
        self.next_id = self.next_id.wrapping_add(1);
        let (tx, epoch, server, timeout) = (self.tx.clone(), self.epoch, self.dns_server, self.dns_timeout);
        let name = name.to_string();
        self.outstanding += 1;
        thread::spawn(move || {
            let payload = query(&name, qtype, id, server, timeout).unwrap_or(DnsPayload::Failed);
            let at = epoch.elapsed().as_millis() as Millis;
            let _ = tx.send(PortEvent::Dns(DnsEvent { record_type: record, at, payload }));
        });
    }
}

fn query(name: &str, qtype: u16, id: u16, server: SocketAddr, timeout: Duration) -> Option<DnsPayload> {
    let bind: SocketAddr = if server.is_ipv6() { "[::]:0".parse().ok()? } else { "0.0.0.0:0".parse().ok()? };
    let socket = UdpSocket::bind(bind).ok()?;
    socket.connect(server).ok()?;
    socket.send(&Message::query(id, Name::parse(name).ok()?, qtype).encode()).ok()?;
    let deadline = Instant::now() + timeout;
    let mut buf = [0u8; 4096];
    loop {
        let left = deadline.checked_duration_since(Instant::now())?;
        socket.set_read_timeout(Some(left)).ok()?;
        let n = socket.recv(&mut buf).ok()?;
        let Ok(msg) = Message::decode(&buf[..n]) else { continue };
        if msg.header.id != id || !msg.header.qr {
            continue;
        }
        if msg.header.rcode != rcode::NOERROR {
            return Some(DnsPayload::Failed);
        }
        if qtype == rtype::HTTPS || qtype == rtype::SVCB {
            let bindings = msg
                .answers
                .iter()
                .filter_map(|r| match &r.rdata {
                    RData::Svcb(s) => helab_dns::svcb::from_rdata(s).ok(),
                    _ => None,
                })
                .collect();
            return Some(DnsPayload::Services(bindings));
        }
        return Some(DnsPayload::Addresses(msg.answer_addresses()));
    }
}

impl TransportPort for RealWorld {
    fn start_attempt(&mut self, attempt: AttemptId, candidate: &EndpointCandidate) {
        self.cancelled.remove(&attempt);
        let (tx, epoch, timeout, streams) = (self.tx.clone(), self.epoch, self.connect_timeout, self.streams.clone());
        let addr = candidate.socket_addr();
        self.outstanding += 1;
        thread::spawn(move || {
            let result = match TcpStream::connect_timeout(&addr, timeout) {
                Ok(stream) => {
                    let _ = stream.set_nodelay(true);
                    streams.lock().expect("stream map poisoned").insert(attempt, stream);
                    ConnectResult::Established
                }
                Err(_) => ConnectResult::Failed,
            };
            let at = epoch.elapsed().as_millis() as Millis;
            let _ = tx.send(PortEvent::Connect { attempt, at, result });
        });
    }

    fn cancel_attempt(&mut self, attempt: AttemptId) {
        self.cancelled.insert(attempt);
        self.take_stream(attempt);
    }
}

/// Minimal HTTP/1.1 GET over an established stream; returns status and
/// body.
pub fn http_get(stream: &mut TcpStream, host: &str, path: &str, timeout: Duration) -> std::io::Result<(u16, String)> {
    stream.set_read_timeout(Some(timeout))?;
    write!(stream, "GET {path} HTTP/1.1\r\nHost: {host}\r\nConnection: close\r\nUser-Agent: helab-demo\r\n\r\n")?;
    let mut raw = Vec::new();
    stream.read_to_end(&mut raw)?;
    let text = String::from_utf8_lossy(&raw);
    let (head, body) = text.split_once("\r\n\r\n").unwrap_or((&text, ""));
    let status = head
        .split_whitespace()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidData, "bad status line"))?;
    Ok((status, body.to_string()))
}
