//! Test parameters carried in the queried name.
//!
//! Grammar: `d<delay_ms>-<a|aaaa|https|none>-<nonce>.<base_zone>`, one label
//! in front of the base zone. The nonce is `[a-z0-9]+` and at most 48
//! characters.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::wire::{rtype, Name};

pub const MAX_NONCE_LEN: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetRecord {
    A,
    Aaaa,
    Https,
    None,
}

impl TargetRecord {
    pub fn as_str(self) -> &'static str {
        match self {
            TargetRecord::A => "a",
            TargetRecord::Aaaa => "aaaa",
            TargetRecord::Https => "https",
            TargetRecord::None => "none",
        }
    }

    pub fn matches(self, qtype: u16) -> bool {
        matches!(
            (self, qtype),
            (TargetRecord::A, rtype::A)
                | (TargetRecord::Aaaa, rtype::AAAA)
                | (TargetRecord::Https, rtype::HTTPS)
        )
    }
}

impl FromStr for TargetRecord {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "a" => Ok(TargetRecord::A),
            "aaaa" => Ok(TargetRecord::Aaaa),
            "https" => Ok(TargetRecord::Https),
            "none" => Ok(TargetRecord::None),
            _ => Err(NameError::BadEncoding),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum NameError {
    #[error("name is outside the served zone")]
    NotAuthoritative,
    #[error("label does not follow the delay encoding")]
    BadEncoding,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EncodedName {
    pub delay_ms: u64,
    pub target_record: TargetRecord,
    pub nonce: String,
    pub base_zone: Name,
}

impl EncodedName {
    pub fn new(delay_ms: u64, target_record: TargetRecord, nonce: impl Into<String>, base_zone: Name) -> Self {
        Self {
            delay_ms,
            target_record,
            nonce: nonce.into(),
            base_zone,
        }
    }

    pub fn label(&self) -> String {
        format!("d{}-{}-{}", self.delay_ms, self.target_record.as_str(), self.nonce)
    }

    pub fn render(&self) -> String {
        format!("{}.{}", self.label(), self.base_zone)
    }

    pub fn to_name(&self) -> Name {
        self.base_zone
            .prepend(&self.label())
            .expect("nonce length is bounded")
    }
}

impl fmt::Display for EncodedName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

pub fn valid_nonce(nonce: &str) -> bool {
    !nonce.is_empty()
        && nonce.len() <= MAX_NONCE_LEN
        && nonce.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit())
}

/// ```
/// use helab_dns::name::{parse_encoded_name, TargetRecord};
/// use helab_dns::wire::Name;
///
/// let zone = Name::parse("he-test.example.").unwrap();
/// let n = parse_encoded_name(&Name::parse("d250-aaaa-x7f3.he-test.example.").unwrap(), &zone).unwrap();
/// assert_eq!((n.delay_ms, n.target_record, n.nonce.as_str()), (250, TargetRecord::Aaaa, "x7f3"));
/// ```
pub fn parse_encoded_name(name: &Name, base_zone: &Name) -> Result<EncodedName, NameError> {
    let front = name.strip_apex(base_zone).ok_or(NameError::NotAuthoritative)?;
    let [label] = front else {
        return Err(NameError::BadEncoding);
    };
    let label = std::str::from_utf8(label)
        .map_err(|_| NameError::BadEncoding)?
        .to_ascii_lowercase();
    let mut parts = label.splitn(3, '-');
    let (Some(delay), Some(record), Some(nonce)) = (parts.next(), parts.next(), parts.next()) else {
        return Err(NameError::BadEncoding);
    };
    let digits = delay.strip_prefix('d').ok_or(NameError::BadEncoding)?;
    // Canonical digits only so that render(parse(n)) == n.
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || (digits.len() > 1 && digits.starts_with('0')) {
        return Err(NameError::BadEncoding);
    }
    let delay_ms = digits.parse().map_err(|_| NameError::BadEncoding)?;
    if !valid_nonce(nonce) {
        return Err(NameError::BadEncoding);
    }
    Ok(EncodedName {
        delay_ms,
        target_record: record.parse()?,
        nonce: nonce.to_string(),
        base_zone: base_zone.clone(),
    })
}
