//! What a session's observations say about the client's Connection Attempt
//! Delay.
//!
//! Each tier delays IPv6 by its `delay_ms`. A client with delay `c` uses
//! IPv6 while `delay_ms < c` and falls back to IPv4 once `delay_ms > c`, so
//! the highest IPv6 tier and the lowest IPv4 tier above it bracket `c`.

use std::collections::{BTreeMap, BTreeSet};

use helab_core::{Family, Millis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One successful fetch: which family served a tier on one repetition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TierObservation {
    pub delay_ms: Millis,
    pub repetition: u32,
    pub family: Family,
}

/// `(lo, hi]` in ms; `None` is an open end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CadInterval {
    pub lo: Option<Millis>,
    pub hi: Option<Millis>,
    /// Some tier was split between families, or IPv6 won a tier above an
    /// IPv4 tier.
    pub inconsistent: bool,
}

impl CadInterval {
    pub fn contains(&self, cad: Millis) -> bool {
        self.lo.is_none_or(|lo| cad > lo) && self.hi.is_none_or(|hi| cad <= hi)
    }
}

impl std::fmt::Display for CadInterval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.lo {
            Some(lo) => write!(f, "({lo}, ")?,
            None => f.write_str("(-inf, ")?,
        }
        match self.hi {
            Some(hi) => write!(f, "{hi}]"),
            None => f.write_str("+inf)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InferenceError {
    #[error("need observations on at least two tiers, got {0}")]
    TooFewTiers(usize),
}

#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    v4: u32,
    v6: u32,
}

fn tally(observations: &[TierObservation]) -> BTreeMap<Millis, Tally> {
    let mut tiers: BTreeMap<Millis, Tally> = BTreeMap::new();
    for o in observations {
        let t = tiers.entry(o.delay_ms).or_default();
        match o.family {
            Family::V4 => t.v4 += 1,
            Family::V6 => t.v6 += 1,
        }
    }
    tiers
}

/// Brackets the delay using each tier's majority family. A tie counts as
/// IPv6 and marks the result inconsistent.
pub fn infer_cad_interval(observations: &[TierObservation]) -> Result<CadInterval, InferenceError> {
    let tiers = tally(observations);
    if tiers.len() < 2 {
        return Err(InferenceError::TooFewTiers(tiers.len()));
    }
    let majority: Vec<(Millis, Family)> = tiers
        .iter()
        .map(|(&d, t)| (d, if t.v4 > t.v6 { Family::V4 } else { Family::V6 }))
        .collect();
    let mixed = tiers.values().any(|t| t.v4 > 0 && t.v6 > 0);

    let lo = majority.iter().rev().find(|(_, f)| *f == Family::V6).map(|&(d, _)| d);
    let hi = majority
        .iter()
        .find(|&&(d, f)| f == Family::V4 && lo.is_none_or(|lo| d > lo))
        .map(|&(d, _)| d);
    let flipped = majority
        .iter()
        .any(|&(d, f)| f == Family::V4 && lo.is_some_and(|lo| d < lo));
    Ok(CadInterval { lo, hi, inconsistent: mixed || flipped })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierConsistency {
    pub delay_ms: Millis,
    pub repetitions: u32,
    /// Repetitions that used IPv6 here after using IPv4 at a smaller delay.
    pub violations: u32,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyScore {
    pub tiers: Vec<TierConsistency>,
    /// Repetitions with at least one violation.
    pub inconsistent_repetitions: u32,
    pub total_repetitions: u32,
}

/// Scores each repetition against the monotone pattern (IPv6 below the
/// switch point, IPv4 above).
pub fn consistency_score(observations: &[TierObservation]) -> ConsistencyScore {
    let mut by_rep: BTreeMap<u32, BTreeMap<Millis, Family>> = BTreeMap::new();
    for o in observations {
        by_rep.entry(o.repetition).or_default().insert(o.delay_ms, o.family);
    }
    let delays: BTreeSet<Millis> = observations.iter().map(|o| o.delay_ms).collect();
    let mut per_tier: BTreeMap<Millis, (u32, u32)> = delays.iter().map(|&d| (d, (0, 0))).collect();
    let mut inconsistent = 0;
    for row in by_rep.values() {
        let mut seen_v4 = false;
        let mut bad = false;
        for (&d, &f) in row {
            let cell = per_tier.get_mut(&d).expect("delay collected above");
            cell.0 += 1;
            match f {
                Family::V4 => seen_v4 = true,
                Family::V6 if seen_v4 => {
                    cell.1 += 1;
                    bad = true;
                }
                Family::V6 => {}
            }
        }
        inconsistent += u32::from(bad);
    }
    ConsistencyScore {
        tiers: per_tier
            .into_iter()
            .map(|(delay_ms, (repetitions, violations))| TierConsistency {
                delay_ms,
                repetitions,
                violations,
                fraction: if repetitions == 0 { 0.0 } else { f64::from(violations) / f64::from(repetitions) },
            })
            .collect(),
        inconsistent_repetitions: inconsistent,
        total_repetitions: by_rep.len() as u32,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(delay_ms: Millis, repetition: u32, family: Family) -> TierObservation {
        TierObservation { delay_ms, repetition, family }
    }

    #[test]
    fn too_few_tiers() {
        assert_eq!(
            infer_cad_interval(&[obs(0, 0, Family::V6)]),
            Err(InferenceError::TooFewTiers(1))
        );
    }

    #[test]
    fn open_ends() {
        let all_v6 = [obs(0, 0, Family::V6), obs(100, 0, Family::V6)];
        let i = infer_cad_interval(&all_v6).unwrap();
        assert_eq!((i.lo, i.hi), (Some(100), None));
        let all_v4 = [obs(0, 0, Family::V4), obs(100, 0, Family::V4)];
        let i = infer_cad_interval(&all_v4).unwrap();
        assert_eq!((i.lo, i.hi), (None, Some(0)));
        assert_eq!(i.to_string(), "(-inf, 0]");
    }

    #[test]
    fn tie_counts_as_ipv6() {
        let o = [obs(0, 0, Family::V6), obs(100, 0, Family::V6), obs(100, 1, Family::V4), obs(200, 0, Family::V4)];
        let i = infer_cad_interval(&o).unwrap();
        assert_eq!((i.lo, i.hi, i.inconsistent), (Some(100), Some(200), true));
    }
}
