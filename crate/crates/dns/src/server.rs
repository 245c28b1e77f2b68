//! Transport-free query handling: bytes in, bytes plus a hold time out.

use std::net::{IpAddr, Ipv4Addr, Ipv6Addr, SocketAddr};

use helab_core::he::ServiceBinding;
use helab_core::Family;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::name::{parse_encoded_name, NameError};
use crate::querylog::QueryLogEntry;
use crate::svcb;
use crate::wire::{rcode, rtype, Header, Message, Name, RData, Record, Soa, WireError, CLASS_IN};
use crate::zone::{SoaSpec, ZoneSpec};

pub const EDNS_UDP_SIZE: u16 = 1232;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub base_zone: String,
    /// Answers for A queries on encoded names.
    pub v4: Vec<Ipv4Addr>,
    /// Answers for AAAA queries on encoded names.
    pub v6: Vec<Ipv6Addr>,
    pub https: Vec<ServiceBinding>,
    pub ttl: u32,
    /// Defaults to `ns1.<base_zone>`.
    pub ns_name: Option<String>,
    /// Addresses published for the NS name; defaults to `v4` and `v6`.
    pub ns_addresses: Vec<IpAddr>,
    pub zones: Vec<ZoneSpec>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            base_zone: "he-test.example.".into(),
            v4: vec![Ipv4Addr::LOCALHOST],
            v6: vec![Ipv6Addr::LOCALHOST],
            https: Vec::new(),
            ttl: 0,
            ns_name: None,
            ns_addresses: Vec::new(),
            zones: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("invalid name in server config: {0}")]
    Name(#[from] WireError),
    #[error("zone {apex}: record {name} has the wrong address family")]
    RecordFamily { apex: String, name: String },
}

/// Where and when a query came in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryContext {
    pub source: SocketAddr,
    pub received_at: u64,
}

impl QueryContext {
    pub fn family(&self) -> Family {
        Family::of(&self.source.ip())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Served {
    pub response: Vec<u8>,
    /// How long to hold the response after receipt.
    pub delay_ms: u64,
    pub log: QueryLogEntry,
}

/// A validated [`ServerConfig`].
#[derive(Debug, Clone)]
pub struct Server {
    base_zone: Name,
    ns_name: Name,
    ns_addresses: Vec<IpAddr>,
    v4: Vec<Ipv4Addr>,
    v6: Vec<Ipv6Addr>,
    https: Vec<crate::wire::Svcb>,
    ttl: u32,
    zones: Vec<Zone>,
}

#[derive(Debug, Clone)]
struct Zone {
    apex: Name,
    ns_names: Vec<Name>,
    records: Vec<Record>,
    soa: SoaSpec,
    ipv6_delay_ms: u64,
}

enum Lookup {
    Answer(Vec<Record>),
    NoData,
    NxDomain,
}

impl Server {
    pub fn new(config: &ServerConfig) -> Result<Self, ConfigError> {
        let base_zone = Name::parse(&config.base_zone)?;
        let ns_name = match &config.ns_name {
            Some(n) => Name::parse(n)?,
            None => base_zone.prepend("ns1")?,
        };
        let ns_addresses = if config.ns_addresses.is_empty() {
            config
                .v4
                .iter()
                .map(|a| IpAddr::V4(*a))
                .chain(config.v6.iter().map(|a| IpAddr::V6(*a)))
                .collect()
        } else {
            config.ns_addresses.clone()
        };
        let https = config
            .https
            .iter()
            .map(svcb::to_rdata)
            .collect::<Result<_, _>>()?;
        let zones = config
            .zones
            .iter()
            .map(Zone::compile)
            .collect::<Result<_, _>>()?;
        Ok(Self {
            base_zone,
            ns_name,
            ns_addresses,
            v4: config.v4.clone(),
            v6: config.v6.clone(),
            https,
            ttl: config.ttl,
            zones,
        })
    }

    pub fn base_zone(&self) -> &Name {
        &self.base_zone
    }

    /// `None` when the datagram is not a query at all (too short, or a
    /// response).
    pub fn serve(&self, query: &[u8], ctx: &QueryContext) -> Option<Served> {
        if query.len() < 12 || query[2] & 0x80 != 0 {
            return None;
        }
        let id = u16::from_be_bytes([query[0], query[1]]);
        let message = match Message::decode(query) {
            Ok(m) => m,
            Err(_) => return Some(self.bare_error(id, query, rcode::FORMERR, ctx)),
        };
        if message.header.opcode != 0 {
            return Some(self.reply(&message, rcode::NOTIMP, Vec::new(), Vec::new(), 0, ctx));
        }
        let [question] = message.questions.as_slice() else {
            return Some(self.reply(&message, rcode::FORMERR, Vec::new(), Vec::new(), 0, ctx));
        };
        if question.qclass != CLASS_IN {
            return Some(self.reply(&message, rcode::REFUSED, Vec::new(), Vec::new(), 0, ctx));
        }
        let (code, answers, authority, delay) = self.answer(&question.name, question.qtype, ctx);
        Some(self.reply(&message, code, answers, authority, delay, ctx))
    }

    fn answer(&self, name: &Name, qtype: u16, ctx: &QueryContext) -> (u8, Vec<Record>, Vec<Record>, u64) {
        // Exact record names first: out-of-apex NS hosts live in a zone spec.
        if let Some(zone) = self
            .zones
            .iter()
            .filter(|z| z.owns(name))
            .max_by_key(|z| z.apex.labels().len())
        {
            let delay = if ctx.family() == Family::V6
                && name.is_within(&zone.apex)
                && !zone.ns_names.iter().any(|n| n.eq_ignore_case(name))
            {
                zone.ipv6_delay_ms
            } else {
                0
            };
            let soa = || vec![zone.soa_record(&self.ns_name)];
            return match zone.lookup(name, qtype) {
                Lookup::Answer(r) => (rcode::NOERROR, r, Vec::new(), delay),
                Lookup::NoData => (rcode::NOERROR, Vec::new(), soa(), delay),
                Lookup::NxDomain => (rcode::NXDOMAIN, Vec::new(), soa(), delay),
            };
        }
        if !name.is_within(&self.base_zone) {
            return (rcode::REFUSED, Vec::new(), Vec::new(), 0);
        }
        let soa = || vec![self.soa_record()];
        if name.eq_ignore_case(&self.base_zone) {
            let answers = match qtype {
                rtype::NS => vec![self.record(name, rtype::NS, RData::Ns(self.ns_name.clone()))],
                rtype::SOA => vec![self.soa_record()],
                _ => Vec::new(),
            };
            let authority = if answers.is_empty() { soa() } else { Vec::new() };
            return (rcode::NOERROR, answers, authority, 0);
        }
        if name.eq_ignore_case(&self.ns_name) {
            let answers: Vec<_> = self
                .ns_addresses
                .iter()
                .filter(|a| address_type(a) == qtype)
                .map(|a| Record::address(name.clone(), *a, self.ttl))
                .collect();
            let authority = if answers.is_empty() { soa() } else { Vec::new() };
            return (rcode::NOERROR, answers, authority, 0);
        }
        match parse_encoded_name(name, &self.base_zone) {
            Ok(encoded) => {
                let delay = if encoded.target_record.matches(qtype) {
                    encoded.delay_ms
                } else {
                    0
                };
                let answers: Vec<Record> = match qtype {
                    rtype::A => self
                        .v4
                        .iter()
                        .map(|a| Record::address(name.clone(), IpAddr::V4(*a), self.ttl))
                        .collect(),
                    rtype::AAAA => self
                        .v6
                        .iter()
                        .map(|a| Record::address(name.clone(), IpAddr::V6(*a), self.ttl))
                        .collect(),
                    rtype::HTTPS => self
                        .https
                        .iter()
                        .map(|s| self.record(name, rtype::HTTPS, RData::Svcb(s.clone())))
                        .collect(),
                    _ => Vec::new(),
                };
                let authority = if answers.is_empty() { soa() } else { Vec::new() };
                (rcode::NOERROR, answers, authority, delay)
            }
            Err(NameError::BadEncoding) => (rcode::NXDOMAIN, Vec::new(), soa(), 0),
            Err(NameError::NotAuthoritative) => (rcode::REFUSED, Vec::new(), Vec::new(), 0),
        }
    }

    fn record(&self, name: &Name, rtype: u16, rdata: RData) -> Record {
        Record {
            name: name.clone(),
            rtype,
            class: CLASS_IN,
            ttl: self.ttl,
            rdata,
        }
    }

    fn soa_record(&self) -> Record {
        soa_record(&self.base_zone, &self.ns_name, &SoaSpec::default(), self.ttl)
    }

    fn reply(
        &self,
        query: &Message,
        code: u8,
        answers: Vec<Record>,
        authorities: Vec<Record>,
        delay_ms: u64,
        ctx: &QueryContext,
    ) -> Served {
        let additionals = query
            .additionals
            .iter()
            .any(|r| r.rtype == rtype::OPT)
            .then(|| Record {
                name: Name::root(),
                rtype: rtype::OPT,
                class: EDNS_UDP_SIZE,
                ttl: 0,
                rdata: RData::Other(Vec::new()),
            })
            .into_iter()
            .collect();
        let response = Message {
            header: Header {
                id: query.header.id,
                qr: true,
                opcode: query.header.opcode,
                aa: code != rcode::REFUSED && code != rcode::FORMERR && code != rcode::NOTIMP,
                rd: query.header.rd,
                cd: query.header.cd,
                rcode: code,
                ..Header::default()
            },
            questions: query.questions.clone(),
            answers,
            authorities,
            additionals,
        };
        let (qname, qtype) = query
            .questions
            .first()
            .map(|q| (q.name.to_string(), q.qtype))
            .unwrap_or_default();
        Served {
            response: response.encode(),
            delay_ms,
            log: QueryLogEntry {
                at_ms: ctx.received_at,
                source: ctx.source,
                family: ctx.family(),
                qname,
                qtype,
                id: query.header.id,
                rcode: code,
                delay_ms,
            },
        }
    }

    /// FORMERR for a message whose body would not decode: header only.
    fn bare_error(&self, id: u16, query: &[u8], code: u8, ctx: &QueryContext) -> Served {
        let header = Header {
            id,
            qr: true,
            opcode: (query[2] >> 3) & 0xF,
            rd: query[2] & 1 != 0,
            rcode: code,
            ..Header::default()
        };
        let response = Message {
            header,
            ..Message::default()
        };
        Served {
            response: response.encode(),
            delay_ms: 0,
            log: QueryLogEntry {
                at_ms: ctx.received_at,
                source: ctx.source,
                family: ctx.family(),
                qname: String::new(),
                qtype: 0,
                id,
                rcode: code,
                delay_ms: 0,
            },
        }
    }
}

impl Zone {
    fn compile(spec: &ZoneSpec) -> Result<Self, ConfigError> {
        let apex = Name::parse(&spec.apex)?;
        let ns_names = spec
            .ns_names
            .iter()
            .map(|n| Name::parse(n))
            .collect::<Result<Vec<_>, _>>()?;
        let mut records = Vec::new();
        for (list, want) in [(&spec.a_records, Family::V4), (&spec.aaaa_records, Family::V6)] {
            for r in list {
                if Family::of(&r.address) != want {
                    return Err(ConfigError::RecordFamily {
                        apex: spec.apex.clone(),
                        name: r.name.clone(),
                    });
                }
                records.push(Record::address(Name::parse(&r.name)?, r.address, r.ttl));
            }
        }
        for r in &spec.https_records {
            records.push(Record {
                name: Name::parse(&r.name)?,
                rtype: rtype::HTTPS,
                class: CLASS_IN,
                ttl: r.ttl,
                rdata: RData::Svcb(svcb::to_rdata(&r.binding)?),
            });
        }
        Ok(Self {
            apex,
            ns_names,
            records,
            soa: spec.soa,
            ipv6_delay_ms: spec.ipv6_delay_ms,
        })
    }

    fn owns(&self, name: &Name) -> bool {
        name.is_within(&self.apex) || self.records.iter().any(|r| r.name.eq_ignore_case(name))
    }

    fn lookup(&self, name: &Name, qtype: u16) -> Lookup {
        if name.eq_ignore_case(&self.apex) {
            return match qtype {
                rtype::NS => Lookup::Answer(
                    self.ns_names
                        .iter()
                        .map(|ns| Record {
                            name: name.clone(),
                            rtype: rtype::NS,
                            class: CLASS_IN,
                            ttl: 0,
                            rdata: RData::Ns(ns.clone()),
                        })
                        .collect(),
                ),
                rtype::SOA => Lookup::Answer(vec![soa_record(&self.apex, &self.ns_names[0], &self.soa, 0)]),
                _ => Lookup::NoData,
            };
        }
        let mut exists = false;
        let mut answers = Vec::new();
        for r in &self.records {
            if r.name.eq_ignore_case(name) {
                exists = true;
                if r.rtype == qtype {
                    let mut r = r.clone();
                    r.name = name.clone();
                    answers.push(r);
                }
            }
        }
        match (exists, answers.is_empty()) {
            (_, false) => Lookup::Answer(answers),
            (true, true) => Lookup::NoData,
            (false, _) => Lookup::NxDomain,
        }
    }

    fn soa_record(&self, fallback_ns: &Name) -> Record {
        let mname = self.ns_names.first().unwrap_or(fallback_ns);
        soa_record(&self.apex, mname, &self.soa, 0)
    }
}

fn soa_record(apex: &Name, mname: &Name, soa: &SoaSpec, ttl: u32) -> Record {
    Record {
        name: apex.clone(),
        rtype: rtype::SOA,
        class: CLASS_IN,
        ttl,
        rdata: RData::Soa(Soa {
            mname: mname.clone(),
            rname: apex.prepend("hostmaster").unwrap_or_else(|_| apex.clone()),
            serial: soa.serial,
            refresh: soa.refresh,
            retry: soa.retry,
            expire: soa.expire,
            minimum: soa.minimum,
        }),
    }
}

fn address_type(address: &IpAddr) -> u16 {
    match address {
        IpAddr::V4(_) => rtype::A,
        IpAddr::V6(_) => rtype::AAAA,
    }
}
