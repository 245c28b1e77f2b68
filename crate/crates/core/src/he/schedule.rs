use serde::Serialize;

use super::candidate::EndpointCandidate;
use super::config::{HeConfig, Version};
use super::error::HeError;
use crate::net::Millis;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScheduledAttempt {
    pub candidate: EndpointCandidate,
    pub launch_at: Millis,
}

/// Launch plan: entry `i` starts at `start + i * effective_cad`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttemptSchedule {
    entries: Vec<ScheduledAttempt>,
}

impl AttemptSchedule {
    pub fn entries(&self) -> &[ScheduledAttempt] {
        &self.entries
    }

    pub fn ordered_candidates(&self) -> impl Iterator<Item = &EndpointCandidate> {
        self.entries.iter().map(|e| &e.candidate)
    }

    pub fn stagger(&self) -> Vec<Millis> {
        self.entries.iter().map(|e| e.launch_at).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Staggers an already ordered candidate list.
///
/// v1 only ever makes one attempt per family: the first preferred-family
/// candidate, then the first of the other family.
pub fn build_schedule(
    ordered: &[EndpointCandidate],
    start: Millis,
    config: &HeConfig,
) -> Result<AttemptSchedule, HeError> {
    if ordered.is_empty() {
        return Err(HeError::EmptyCandidateSet);
    }
    let cad = config.effective_cad();
    let picked = truncate_for_version(ordered, config);
    let entries = picked
        .into_iter()
        .enumerate()
        .map(|(i, candidate)| ScheduledAttempt {
            candidate,
            launch_at: start + i as Millis * cad,
        })
        .collect();
    Ok(AttemptSchedule { entries })
}

pub(crate) fn truncate_for_version(
    ordered: &[EndpointCandidate],
    config: &HeConfig,
) -> Vec<EndpointCandidate> {
    if config.version != Version::V1 {
        return ordered.to_vec();
    }
    let preferred = config.preferred_family;
    [preferred, preferred.other()]
        .into_iter()
        .filter_map(|f| ordered.iter().find(|c| c.family() == f).cloned())
        .collect()
}
