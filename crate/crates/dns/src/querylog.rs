use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::net::SocketAddr;
use std::path::Path;
use std::sync::{Arc, Mutex};

use helab_core::Family;
use serde::{Deserialize, Serialize};

/// One received query, as seen by the server.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLogEntry {
    /// Receipt time, ms since the server epoch.
    pub at_ms: u64,
    pub source: SocketAddr,
    /// Transport family the query arrived over.
    pub family: Family,
    pub qname: String,
    pub qtype: u16,
    pub id: u16,
    pub rcode: u8,
    pub delay_ms: u64,
}

impl QueryLogEntry {
    pub fn respond_at_ms(&self) -> u64 {
        self.at_ms + self.delay_ms
    }
}

/// Shared in-memory log, optionally mirrored to a JSON-lines file.
#[derive(Debug, Clone, Default)]
pub struct QueryLog {
    inner: Arc<Mutex<Inner>>,
}

#[derive(Debug)]
struct Inner {
    entries: Vec<QueryLogEntry>,
    file: Option<File>,
    keep: bool,
}

impl Default for Inner {
    fn default() -> Self {
        Self {
            entries: Vec::new(),
            file: None,
            keep: true,
        }
    }
}

impl QueryLog {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn with_file(path: &Path) -> io::Result<Self> {
        Self::open(path, true)
    }

    /// For long-running servers: nothing is kept in memory.
    pub fn file_only(path: &Path) -> io::Result<Self> {
        Self::open(path, false)
    }

    /// Records nothing.
    pub fn disabled() -> Self {
        Self {
            inner: Arc::new(Mutex::new(Inner {
                keep: false,
                ..Inner::default()
            })),
        }
    }

    fn open(path: &Path, keep: bool) -> io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            inner: Arc::new(Mutex::new(Inner {
                entries: Vec::new(),
                file: Some(file),
                keep,
            })),
        })
    }

    pub fn append(&self, entry: QueryLogEntry) -> io::Result<()> {
        let mut inner = self.inner.lock().expect("query log poisoned");
        if let Some(file) = inner.file.as_mut() {
            let line = serde_json::to_string(&entry).map_err(io::Error::other)?;
            writeln!(file, "{line}")?;
        }
        if inner.keep {
            inner.entries.push(entry);
        }
        Ok(())
    }

    pub fn entries(&self) -> Vec<QueryLogEntry> {
        self.inner.lock().expect("query log poisoned").entries.clone()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("query log poisoned").entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Entries received at or after `from_ms`.
    pub fn since(&self, from_ms: u64) -> Vec<QueryLogEntry> {
        self.entries().into_iter().filter(|e| e.at_ms >= from_ms).collect()
    }
}

pub fn read_json_lines(path: &Path) -> io::Result<Vec<QueryLogEntry>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(at_ms: u64) -> QueryLogEntry {
        QueryLogEntry {
            at_ms,
            source: "[::1]:5353".parse().unwrap(),
            family: Family::V6,
            qname: "d0-none-a.he-test.example.".into(),
            qtype: 28,
            id: 7,
            rcode: 0,
            delay_ms: 0,
        }
    }

    #[test]
    fn file_mirror_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.jsonl");
        let log = QueryLog::with_file(&path).unwrap();
        log.append(entry(1)).unwrap();
        log.append(entry(5)).unwrap();
        assert_eq!(read_json_lines(&path).unwrap(), log.entries());
        assert_eq!(log.since(2).len(), 1);
    }
}
