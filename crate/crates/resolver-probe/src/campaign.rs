use std::collections::HashSet;

use helab_dns::{synthesize_resolver_zones, ZoneSpec, ZoneTemplate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Zones to load into dns_lab and the names to ask the resolver under test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Campaign {
    pub zones: Vec<ZoneSpec>,
    pub queries: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CampaignError {
    #[error("delay {0} ms appears twice")]
    DuplicateDelay(u64),
}

/// One fresh zone per delay so no resolver cache carries over between
/// measurements. Without glue, NS names live outside their zone and must
/// be resolved through our server.
pub fn build_campaign(delays: &[u64], glue: bool, template: &ZoneTemplate) -> Result<Campaign, CampaignError> {
    let mut seen = HashSet::new();
    if let Some(&d) = delays.iter().find(|&&d| !seen.insert(d)) {
        return Err(CampaignError::DuplicateDelay(d));
    }
    let template = ZoneTemplate { glue, ..template.clone() };
    let zones = synthesize_resolver_zones(delays, &template);
    let queries = zones.iter().map(|z| z.test_name()).collect();
    Ok(Campaign { zones, queries })
}

impl Campaign {
    /// Every apex and NS name is used once.
    pub fn names_unique(&self) -> bool {
        let mut names = HashSet::new();
        self.zones
            .iter()
            .flat_map(|z| std::iter::once(&z.apex).chain(&z.ns_names))
            .all(|n| names.insert(n.to_ascii_lowercase()))
    }

    /// The `zones` file dns-lab loads.
    pub fn zones_toml(&self) -> String {
        #[derive(Serialize)]
        struct ZonesFile<'a> {
            zones: &'a [ZoneSpec],
        }
        toml::to_string(&ZonesFile { zones: &self.zones }).expect("zones serialize")
    }
}
