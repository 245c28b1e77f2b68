//! RFC 1035 message codec, limited to what the lab serves.
//!
//! Decoding follows compression pointers anywhere a name may appear.
//! Encoding never compresses.

use std::fmt;
use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};

use thiserror::Error;

pub mod rtype {
    pub const A: u16 = 1;
    pub const NS: u16 = 2;
    pub const SOA: u16 = 6;
    pub const AAAA: u16 = 28;
    pub const OPT: u16 = 41;
    pub const SVCB: u16 = 64;
    pub const HTTPS: u16 = 65;
}

pub mod rcode {
    pub const NOERROR: u8 = 0;
    pub const FORMERR: u8 = 1;
    pub const SERVFAIL: u8 = 2;
    pub const NXDOMAIN: u8 = 3;
    pub const NOTIMP: u8 = 4;
    pub const REFUSED: u8 = 5;
}

pub const CLASS_IN: u16 = 1;
const MAX_NAME_LEN: usize = 255;
const MAX_LABEL_LEN: usize = 63;
const MAX_POINTER_HOPS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("message truncated")]
    Truncated,
    #[error("label longer than 63 bytes")]
    LabelTooLong,
    #[error("name longer than 255 bytes")]
    NameTooLong,
    #[error("compression pointer loop")]
    PointerLoop,
    #[error("unsupported label type {0:#04x}")]
    BadLabelType(u8),
    #[error("malformed record data for type {0}")]
    BadRdata(u16),
    #[error("invalid name {0:?}")]
    BadName(String),
    #[error("trailing bytes after message")]
    TrailingBytes,
}

/// A domain name as raw labels. Comparisons that matter for DNS go through
/// the case-insensitive helpers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Name {
    labels: Vec<Vec<u8>>,
}

impl Name {
    pub fn root() -> Self {
        Self::default()
    }

    /// Presentation format with an optional trailing dot. Escapes are not
    /// supported.
    pub fn parse(text: &str) -> Result<Self, WireError> {
        let trimmed = text.strip_suffix('.').unwrap_or(text);
        if trimmed.is_empty() {
            return Ok(Self::root());
        }
        if text.contains('\\') {
            return Err(WireError::BadName(text.into()));
        }
        let labels: Vec<Vec<u8>> = trimmed.split('.').map(|l| l.as_bytes().to_vec()).collect();
        Self::from_labels(labels).map_err(|_| WireError::BadName(text.into()))
    }

    pub fn from_labels(labels: Vec<Vec<u8>>) -> Result<Self, WireError> {
        let mut total = 1;
        for label in &labels {
            if label.is_empty() {
                return Err(WireError::BadName(String::new()));
            }
            if label.len() > MAX_LABEL_LEN {
                return Err(WireError::LabelTooLong);
            }
            total += label.len() + 1;
        }
        if total > MAX_NAME_LEN {
            return Err(WireError::NameTooLong);
        }
        Ok(Self { labels })
    }

    pub fn labels(&self) -> &[Vec<u8>] {
        &self.labels
    }

    pub fn is_root(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn to_lowercase(&self) -> Self {
        Self {
            labels: self.labels.iter().map(|l| l.to_ascii_lowercase()).collect(),
        }
    }

    pub fn eq_ignore_case(&self, other: &Name) -> bool {
        self.labels.len() == other.labels.len()
            && self
                .labels
                .iter()
                .zip(&other.labels)
                .all(|(a, b)| a.eq_ignore_ascii_case(b))
    }

    /// True for the name itself and everything below it.
    pub fn is_within(&self, apex: &Name) -> bool {
        self.labels.len() >= apex.labels.len()
            && self.labels[self.labels.len() - apex.labels.len()..]
                .iter()
                .zip(&apex.labels)
                .all(|(a, b)| a.eq_ignore_ascii_case(b))
    }

    /// Labels in front of `apex`, if the name is within it.
    pub fn strip_apex(&self, apex: &Name) -> Option<&[Vec<u8>]> {
        self.is_within(apex)
            .then(|| &self.labels[..self.labels.len() - apex.labels.len()])
    }

    /// `label.self`
    pub fn prepend(&self, label: &str) -> Result<Name, WireError> {
        let mut labels = vec![label.as_bytes().to_vec()];
        labels.extend(self.labels.iter().cloned());
        Name::from_labels(labels)
    }

    pub fn wire_len(&self) -> usize {
        self.labels.iter().map(|l| l.len() + 1).sum::<usize>() + 1
    }

    fn write(&self, out: &mut Vec<u8>) {
        for label in &self.labels {
            out.push(label.len() as u8);
            out.extend_from_slice(label);
        }
        out.push(0);
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.labels.is_empty() {
            return f.write_str(".");
        }
        for label in &self.labels {
            for &b in label {
                if b == b'.' || b == b'\\' || !b.is_ascii_graphic() {
                    write!(f, "\\{b:03}")?;
                } else {
                    write!(f, "{}", b as char)?;
                }
            }
            f.write_str(".")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Name {
    type Err = WireError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Name::parse(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Header {
    pub id: u16,
    pub qr: bool,
    pub opcode: u8,
    pub aa: bool,
    pub tc: bool,
    pub rd: bool,
    pub ra: bool,
    pub ad: bool,
    pub cd: bool,
    pub rcode: u8,
}

impl Header {
    fn flags(&self) -> u16 {
        (self.qr as u16) << 15
            | ((self.opcode as u16) & 0xF) << 11
            | (self.aa as u16) << 10
            | (self.tc as u16) << 9
            | (self.rd as u16) << 8
            | (self.ra as u16) << 7
            | (self.ad as u16) << 5
            | (self.cd as u16) << 4
            | (self.rcode as u16) & 0xF
    }

    fn from_parts(id: u16, flags: u16) -> Self {
        Self {
            id,
            qr: flags & 0x8000 != 0,
            opcode: ((flags >> 11) & 0xF) as u8,
            aa: flags & 0x0400 != 0,
            tc: flags & 0x0200 != 0,
            rd: flags & 0x0100 != 0,
            ra: flags & 0x0080 != 0,
            ad: flags & 0x0020 != 0,
            cd: flags & 0x0010 != 0,
            rcode: (flags & 0xF) as u8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Question {
    pub name: Name,
    pub qtype: u16,
    pub qclass: u16,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Soa {
    pub mname: Name,
    pub rname: Name,
    pub serial: u32,
    pub refresh: u32,
    pub retry: u32,
    pub expire: u32,
    pub minimum: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SvcParam {
    pub key: u16,
    pub value: Vec<u8>,
}

/// SVCB/HTTPS rdata with parameters kept as raw key/value pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Svcb {
    pub priority: u16,
    pub target: Name,
    pub params: Vec<SvcParam>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RData {
    A(Ipv4Addr),
    Aaaa(Ipv6Addr),
    Ns(Name),
    Soa(Soa),
    Svcb(Svcb),
    Other(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub name: Name,
    pub rtype: u16,
    pub class: u16,
    pub ttl: u32,
    pub rdata: RData,
}

impl Record {
    pub fn address(name: Name, address: IpAddr, ttl: u32) -> Self {
        let (rtype, rdata) = match address {
            IpAddr::V4(a) => (rtype::A, RData::A(a)),
            IpAddr::V6(a) => (rtype::AAAA, RData::Aaaa(a)),
        };
        Self {
            name,
            rtype,
            class: CLASS_IN,
            ttl,
            rdata,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Message {
    pub header: Header,
    pub questions: Vec<Question>,
    pub answers: Vec<Record>,
    pub authorities: Vec<Record>,
    pub additionals: Vec<Record>,
}

impl Message {
    /// A recursion-desired query for one name.
    pub fn query(id: u16, name: Name, qtype: u16) -> Self {
        Self {
            header: Header {
                id,
                rd: true,
                ..Header::default()
            },
            questions: vec![Question {
                name,
                qtype,
                qclass: CLASS_IN,
            }],
            ..Self::default()
        }
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, WireError> {
        let mut r = Reader { buf: bytes, pos: 0 };
        let id = r.u16()?;
        let flags = r.u16()?;
        let counts = [r.u16()?, r.u16()?, r.u16()?, r.u16()?];
        let mut questions = Vec::new();
        for _ in 0..counts[0] {
            let name = r.name()?;
            questions.push(Question {
                name,
                qtype: r.u16()?,
                qclass: r.u16()?,
            });
        }
        let mut sections: [Vec<Record>; 3] = Default::default();
        for (section, &count) in sections.iter_mut().zip(&counts[1..]) {
            for _ in 0..count {
                section.push(r.record()?);
            }
        }
        if r.pos != bytes.len() {
            return Err(WireError::TrailingBytes);
        }
        let [answers, authorities, additionals] = sections;
        Ok(Self {
            header: Header::from_parts(id, flags),
            questions,
            answers,
            authorities,
            additionals,
        })
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(512);
        out.extend_from_slice(&self.header.id.to_be_bytes());
        out.extend_from_slice(&self.header.flags().to_be_bytes());
        for count in [
            self.questions.len(),
            self.answers.len(),
            self.authorities.len(),
            self.additionals.len(),
        ] {
            out.extend_from_slice(&(count as u16).to_be_bytes());
        }
        for q in &self.questions {
            q.name.write(&mut out);
            out.extend_from_slice(&q.qtype.to_be_bytes());
            out.extend_from_slice(&q.qclass.to_be_bytes());
        }
        for record in self
            .answers
            .iter()
            .chain(&self.authorities)
            .chain(&self.additionals)
        {
            write_record(record, &mut out);
        }
        out
    }

    /// All A and AAAA addresses in the answer section.
    pub fn answer_addresses(&self) -> Vec<IpAddr> {
        self.answers
            .iter()
            .filter_map(|r| match r.rdata {
                RData::A(a) => Some(IpAddr::V4(a)),
                RData::Aaaa(a) => Some(IpAddr::V6(a)),
                _ => None,
            })
            .collect()
    }
}

fn write_record(record: &Record, out: &mut Vec<u8>) {
    record.name.write(out);
    out.extend_from_slice(&record.rtype.to_be_bytes());
    out.extend_from_slice(&record.class.to_be_bytes());
    out.extend_from_slice(&record.ttl.to_be_bytes());
    let len_at = out.len();
    out.extend_from_slice(&[0, 0]);
    match &record.rdata {
        RData::A(a) => out.extend_from_slice(&a.octets()),
        RData::Aaaa(a) => out.extend_from_slice(&a.octets()),
        RData::Ns(n) => n.write(out),
        RData::Soa(s) => {
            s.mname.write(out);
            s.rname.write(out);
            for v in [s.serial, s.refresh, s.retry, s.expire, s.minimum] {
                out.extend_from_slice(&v.to_be_bytes());
            }
        }
        RData::Svcb(s) => {
            out.extend_from_slice(&s.priority.to_be_bytes());
            s.target.write(out);
            for p in &s.params {
                out.extend_from_slice(&p.key.to_be_bytes());
                out.extend_from_slice(&(p.value.len() as u16).to_be_bytes());
                out.extend_from_slice(&p.value);
            }
        }
        RData::Other(raw) => out.extend_from_slice(raw),
    }
    let len = (out.len() - len_at - 2) as u16;
    out[len_at..len_at + 2].copy_from_slice(&len.to_be_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        let end = self.pos.checked_add(n).ok_or(WireError::Truncated)?;
        let slice = self.buf.get(self.pos..end).ok_or(WireError::Truncated)?;
        self.pos = end;
        Ok(slice)
    }

    fn u16(&mut self) -> Result<u16, WireError> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32, WireError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    /// Reads a possibly compressed name; the cursor ends after the first
    /// pointer or the terminating zero.
    fn name(&mut self) -> Result<Name, WireError> {
        let mut labels = Vec::new();
        let mut total = 1;
        let mut cursor = self.pos;
        let mut resume = None;
        let mut hops = 0;
        loop {
            let len = *self.buf.get(cursor).ok_or(WireError::Truncated)?;
            match len & 0xC0 {
                0x00 => {
                    cursor += 1;
                    if len == 0 {
                        break;
                    }
                    let label = self
                        .buf
                        .get(cursor..cursor + len as usize)
                        .ok_or(WireError::Truncated)?;
                    total += label.len() + 1;
                    if total > MAX_NAME_LEN {
                        return Err(WireError::NameTooLong);
                    }
                    labels.push(label.to_vec());
                    cursor += len as usize;
                }
                0xC0 => {
                    let low = *self.buf.get(cursor + 1).ok_or(WireError::Truncated)?;
                    hops += 1;
                    if hops > MAX_POINTER_HOPS {
                        return Err(WireError::PointerLoop);
                    }
                    resume.get_or_insert(cursor + 2);
                    cursor = ((len as usize & 0x3F) << 8) | low as usize;
                }
                _ => return Err(WireError::BadLabelType(len)),
            }
        }
        self.pos = resume.unwrap_or(cursor);
        Ok(Name { labels })
    }

    fn record(&mut self) -> Result<Record, WireError> {
        let name = self.name()?;
        let rtype = self.u16()?;
        let class = self.u16()?;
        let ttl = self.u32()?;
        let len = self.u16()? as usize;
        let start = self.pos;
        let end = start.checked_add(len).filter(|&e| e <= self.buf.len()).ok_or(WireError::Truncated)?;
        let bad = || WireError::BadRdata(rtype);
        let rdata = match rtype {
            rtype::A => {
                let b: [u8; 4] = self.take(len)?.try_into().map_err(|_| bad())?;
                RData::A(Ipv4Addr::from(b))
            }
            rtype::AAAA => {
                let b: [u8; 16] = self.take(len)?.try_into().map_err(|_| bad())?;
                RData::Aaaa(Ipv6Addr::from(b))
            }
            rtype::NS => RData::Ns(self.name()?),
            rtype::SOA => RData::Soa(Soa {
                mname: self.name()?,
                rname: self.name()?,
                serial: self.u32()?,
                refresh: self.u32()?,
                retry: self.u32()?,
                expire: self.u32()?,
                minimum: self.u32()?,
            }),
            rtype::SVCB | rtype::HTTPS => {
                let priority = self.u16()?;
                let target = self.name()?;
                let mut params = Vec::new();
                while self.pos < end {
                    let key = self.u16()?;
                    let n = self.u16()? as usize;
                    params.push(SvcParam {
                        key,
                        value: self.take(n)?.to_vec(),
                    });
                }
                RData::Svcb(Svcb {
                    priority,
                    target,
                    params,
                })
            }
            _ => RData::Other(self.take(len)?.to_vec()),
        };
        if self.pos != end {
            return Err(bad());
        }
        Ok(Record {
            name,
            rtype,
            class,
            ttl,
            rdata,
        })
    }
}

/// Byte range of the question section, for echoing it verbatim.
pub fn question_span(bytes: &[u8]) -> Result<std::ops::Range<usize>, WireError> {
    let mut r = Reader { buf: bytes, pos: 12 };
    if bytes.len() < 12 {
        return Err(WireError::Truncated);
    }
    let qdcount = u16::from_be_bytes([bytes[4], bytes[5]]);
    for _ in 0..qdcount {
        r.name()?;
        r.take(4)?;
    }
    Ok(12..r.pos)
}
