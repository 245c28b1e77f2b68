use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use helab_core::{Family, Millis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inference::{consistency_score, infer_cad_interval, CadInterval, ConsistencyScore, TierObservation};
use crate::ladder::Ladder;

pub const RESULT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub tier_index: usize,
    pub repetition: u32,
    /// `None` when the fetch failed.
    pub family: Option<Family>,
    pub elapsed_ms: Millis,
    #[serde(default)]
    pub error: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub schema_version: u32,
    pub session_id: String,
    pub ladder_version: u32,
    #[serde(default)]
    pub user_agent: String,
    #[serde(default)]
    pub platform: String,
    pub opt_in: bool,
    pub observations: Vec<Observation>,
}

impl SessionRecord {
    /// Successful observations joined with their tier delays. Unknown tiers
    /// are skipped.
    pub fn tier_observations(&self, ladder: &Ladder) -> Vec<TierObservation> {
        self.observations
            .iter()
            .filter(|o| !o.error)
            .filter_map(|o| {
                let tier = ladder.tiers.get(o.tier_index)?;
                Some(TierObservation { delay_ms: tier.delay_ms, repetition: o.repetition, family: o.family? })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultAck {
    pub session_id: String,
    pub stored: usize,
    pub duplicates: usize,
    /// `None` with fewer than two tiers observed.
    pub interval: Option<CadInterval>,
    pub consistency: ConsistencyScore,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("session did not opt in")]
    OptOut,
    #[error("schema version {0} not supported")]
    Schema(u32),
    #[error("ladder version {got} does not match {expected}")]
    LadderVersion { got: u32, expected: u32 },
    #[error("storage unavailable: {0}")]
    Unavailable(#[from] io::Error),
}

/// Append-only JSON-lines result log. A resubmitted
/// (session, tier, repetition) is acknowledged but not stored twice.
#[derive(Debug)]
pub struct ResultStore {
    path: PathBuf,
    seen: Mutex<HashSet<(String, usize, u32)>>,
}

impl ResultStore {
    /// Rebuilds the duplicate index from an existing log.
    pub fn open(path: impl Into<PathBuf>) -> io::Result<Self> {
        let path = path.into();
        let mut seen = HashSet::new();
        match File::open(&path) {
            Ok(file) => {
                for line in BufReader::new(file).lines() {
                    let line = line?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let record: SessionRecord = serde_json::from_str(&line)
                        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
                    for o in &record.observations {
                        seen.insert((record.session_id.clone(), o.tier_index, o.repetition));
                    }
                }
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(e) => return Err(e),
        }
        Ok(Self { path, seen: Mutex::new(seen) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn submit(&self, record: SessionRecord, ladder: &Ladder) -> Result<ResultAck, StoreError> {
        if !record.opt_in {
            return Err(StoreError::OptOut);
        }
        if record.schema_version != RESULT_SCHEMA_VERSION {
            return Err(StoreError::Schema(record.schema_version));
        }
        if record.ladder_version != ladder.version {
            return Err(StoreError::LadderVersion { got: record.ladder_version, expected: ladder.version });
        }
        let tier_obs = record.tier_observations(ladder);
        let mut seen = self.seen.lock().expect("store lock poisoned");
        let mut batch = HashSet::new();
        let fresh: Vec<Observation> = record
            .observations
            .iter()
            .filter(|o| {
                let key = (record.session_id.clone(), o.tier_index, o.repetition);
                !seen.contains(&key) && batch.insert(key)
            })
            .cloned()
            .collect();
        let duplicates = record.observations.len() - fresh.len();
        if !fresh.is_empty() {
            let line = serde_json::to_string(&SessionRecord { observations: fresh.clone(), ..record.clone() })
                .map_err(io::Error::other)?;
            let mut file = OpenOptions::new().create(true).append(true).open(&self.path)?;
            file.write_all(format!("{line}\n").as_bytes())?;
            seen.extend(batch);
        }
        Ok(ResultAck {
            session_id: record.session_id,
            stored: fresh.len(),
            duplicates,
            interval: infer_cad_interval(&tier_obs).ok(),
            consistency: consistency_score(&tier_obs),
        })
    }

    pub fn records(&self) -> io::Result<Vec<SessionRecord>> {
        let file = match File::open(&self.path) {
            Ok(f) => f,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e),
        };
        BufReader::new(file)
            .lines()
            .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
            .map(|l| serde_json::from_str(&l?).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e)))
            .collect()
    }
}
