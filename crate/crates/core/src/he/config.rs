use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::error::HeError;
use crate::net::{Family, Millis};

/// Fixed Connection Attempt Delay recommended by v2 and the v3 draft.
pub const DEFAULT_CONNECTION_ATTEMPT_DELAY: Millis = 250;
/// v1 recommends a fixed delay somewhere in this window.
pub const V1_CONNECTION_ATTEMPT_DELAY_RANGE: RangeInclusive<Millis> = 150..=250;
/// Absolute floor for a history-derived delay.
pub const MIN_CONNECTION_ATTEMPT_DELAY: Millis = 10;
/// Recommended floor for a history-derived delay.
pub const RECOMMENDED_MIN_CONNECTION_ATTEMPT_DELAY: Millis = 100;
pub const MAX_CONNECTION_ATTEMPT_DELAY: Millis = 2_000;
pub const DEFAULT_RESOLUTION_DELAY: Millis = 50;
pub const DEFAULT_FIRST_ADDRESS_FAMILY_COUNT: u32 = 1;
/// "On the order of 10 minutes".
pub const DEFAULT_CACHE_TTL_SECS: u64 = 600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Version {
    V1,
    V2,
    V3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interleave {
    /// Preferred family block, then the other family block.
    None,
    /// First Address Family Count preferred entries, then alternate.
    Alternate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolFeature {
    Ech,
    Quic,
    Tcp,
}

/// Every tunable of the three algorithm versions.
///
/// Deserializing fills omitted fields from [`HeConfig::for_version`] and
/// validates the result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawHeConfig")]
pub struct HeConfig {
    pub version: Version,
    pub connection_attempt_delay: Millis,
    pub cad_min: Millis,
    pub cad_recommended_min: Millis,
    pub cad_max: Millis,
    /// Only consulted by v2 and v3.
    pub resolution_delay: Millis,
    pub first_address_family_count: u32,
    pub interleave: Interleave,
    pub preferred_family: Family,
    /// Only consulted by v3.
    pub protocol_preference: Vec<ProtocolFeature>,
    pub result_cache_ttl_secs: u64,
}

impl HeConfig {
    pub fn for_version(version: Version) -> Self {
        Self {
            version,
            connection_attempt_delay: DEFAULT_CONNECTION_ATTEMPT_DELAY,
            cad_min: MIN_CONNECTION_ATTEMPT_DELAY,
            cad_recommended_min: RECOMMENDED_MIN_CONNECTION_ATTEMPT_DELAY,
            cad_max: MAX_CONNECTION_ATTEMPT_DELAY,
            resolution_delay: DEFAULT_RESOLUTION_DELAY,
            first_address_family_count: DEFAULT_FIRST_ADDRESS_FAMILY_COUNT,
            // v1: "IPv6 once, then IPv4"; later versions interlace.
            interleave: match version {
                Version::V1 => Interleave::None,
                Version::V2 | Version::V3 => Interleave::Alternate,
            },
            preferred_family: Family::V6,
            protocol_preference: vec![
                ProtocolFeature::Ech,
                ProtocolFeature::Quic,
                ProtocolFeature::Tcp,
            ],
            result_cache_ttl_secs: DEFAULT_CACHE_TTL_SECS,
        }
    }

    pub fn v1() -> Self {
        Self::for_version(Version::V1)
    }

    pub fn v2() -> Self {
        Self::for_version(Version::V2)
    }

    pub fn v3() -> Self {
        Self::for_version(Version::V3)
    }

    pub fn with_cad(mut self, cad: Millis) -> Self {
        self.connection_attempt_delay = cad;
        self
    }

    pub fn with_resolution_delay(mut self, rd: Millis) -> Self {
        self.resolution_delay = rd;
        self
    }

    pub fn with_first_address_family_count(mut self, count: u32) -> Self {
        self.first_address_family_count = count;
        self
    }

    pub fn with_interleave(mut self, interleave: Interleave) -> Self {
        self.interleave = interleave;
        self
    }

    pub fn with_preferred_family(mut self, family: Family) -> Self {
        self.preferred_family = family;
        self
    }

    pub fn validate(&self) -> Result<(), HeError> {
        if self.cad_min > self.connection_attempt_delay
            || self.connection_attempt_delay > self.cad_max
        {
            return Err(HeError::CadOutOfBounds {
                cad: self.connection_attempt_delay,
                min: self.cad_min,
                max: self.cad_max,
            });
        }
        if self.version != Version::V1 && self.resolution_delay == 0 {
            return Err(HeError::ZeroResolutionDelay);
        }
        if self.first_address_family_count == 0 {
            return Err(HeError::ZeroFirstAddressFamilyCount);
        }
        Ok(())
    }

    /// The delay actually used between launches.
    pub fn effective_cad(&self) -> Millis {
        self.connection_attempt_delay
            .clamp(self.cad_min, self.cad_max.max(self.cad_min))
    }

    /// `None` for v1, which has no resolution phase.
    pub fn effective_resolution_delay(&self) -> Option<Millis> {
        match self.version {
            Version::V1 => None,
            Version::V2 | Version::V3 => Some(self.resolution_delay),
        }
    }

    pub fn result_cache_ttl_ms(&self) -> Millis {
        self.result_cache_ttl_secs.saturating_mul(1_000)
    }
}

impl Default for HeConfig {
    fn default() -> Self {
        Self::v2()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHeConfig {
    version: Option<Version>,
    connection_attempt_delay: Option<Millis>,
    cad_min: Option<Millis>,
    cad_recommended_min: Option<Millis>,
    cad_max: Option<Millis>,
    resolution_delay: Option<Millis>,
    first_address_family_count: Option<u32>,
    interleave: Option<Interleave>,
    preferred_family: Option<Family>,
    protocol_preference: Option<Vec<ProtocolFeature>>,
    result_cache_ttl_secs: Option<u64>,
}

impl TryFrom<RawHeConfig> for HeConfig {
    type Error = HeError;

    fn try_from(raw: RawHeConfig) -> Result<Self, Self::Error> {
        let base = HeConfig::for_version(raw.version.unwrap_or(Version::V2));
        let config = HeConfig {
            version: base.version,
            connection_attempt_delay: raw
                .connection_attempt_delay
                .unwrap_or(base.connection_attempt_delay),
            cad_min: raw.cad_min.unwrap_or(base.cad_min),
            cad_recommended_min: raw.cad_recommended_min.unwrap_or(base.cad_recommended_min),
            cad_max: raw.cad_max.unwrap_or(base.cad_max),
            resolution_delay: raw.resolution_delay.unwrap_or(base.resolution_delay),
            first_address_family_count: raw
                .first_address_family_count
                .unwrap_or(base.first_address_family_count),
            interleave: raw.interleave.unwrap_or(base.interleave),
            preferred_family: raw.preferred_family.unwrap_or(base.preferred_family),
            protocol_preference: raw.protocol_preference.unwrap_or(base.protocol_preference),
            result_cache_ttl_secs: raw
                .result_cache_ttl_secs
                .unwrap_or(base.result_cache_ttl_secs),
        };
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_for_every_version() {
        for v in [Version::V1, Version::V2, Version::V3] {
            HeConfig::for_version(v).validate().unwrap();
        }
    }

    #[test]
    fn v1_has_no_resolution_delay() {
        assert_eq!(HeConfig::v1().effective_resolution_delay(), None);
        assert_eq!(HeConfig::v2().effective_resolution_delay(), Some(50));
        // A zero RD is fine when it is never consulted.
        HeConfig::v1().with_resolution_delay(0).validate().unwrap();
        assert_eq!(
            HeConfig::v3().with_resolution_delay(0).validate(),
            Err(HeError::ZeroResolutionDelay)
        );
    }

    #[test]
    fn cad_bounds_are_enforced() {
        let err = HeConfig::v2().with_cad(5).validate().unwrap_err();
        assert_eq!(err, HeError::CadOutOfBounds { cad: 5, min: 10, max: 2000 });
        assert!(HeConfig::v2().with_cad(2001).validate().is_err());
        HeConfig::v2().with_cad(2000).validate().unwrap();
        HeConfig::v2().with_cad(10).validate().unwrap();
    }

    #[test]
    fn fafc_zero_rejected() {
        assert_eq!(
            HeConfig::v2().with_first_address_family_count(0).validate(),
            Err(HeError::ZeroFirstAddressFamilyCount)
        );
    }

    #[test]
    fn partial_toml_fills_version_defaults() {
        let c: HeConfig = toml::from_str("version = \"v1\"\nconnection_attempt_delay = 300\n").unwrap();
        assert_eq!(c.version, Version::V1);
        assert_eq!(c.connection_attempt_delay, 300);
        assert_eq!(c.interleave, Interleave::None);
        assert_eq!(c.resolution_delay, 50);

        let bad: Result<HeConfig, _> = toml::from_str("connection_attempt_delay = 3\n");
        assert!(bad.is_err());
        let unknown: Result<HeConfig, _> = toml::from_str("cad = 3\n");
        assert!(unknown.is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = HeConfig::v3().with_cad(300).with_first_address_family_count(2);
        let back: HeConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
