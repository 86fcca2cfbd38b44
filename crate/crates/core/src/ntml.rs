//! National Traffic Management Log: an append-only, gapless sequence of
//! traffic-management actions with query and status replay.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{FmdsError, Result};
use crate::geometry::Designation;
use crate::time::{TimeWindow, Timestamp};
use crate::tmi::AfpStatus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NtmlEventType {
    FeaCreated,
    FcaCreated,
    AfpProposed,
    AfpScheduled,
    AfpImplemented,
    AfpRevised,
    AfpPurged,
    Note,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NtmlEntry {
    pub sequence: u64,
    pub timestamp: Timestamp,
    pub actor: String,
    pub event_type: NtmlEventType,
    pub subject_id: String,
    pub payload: Value,
}

/// Fields supplied by the caller; the log assigns the sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct NewEntry {
    pub timestamp: Timestamp,
    pub actor: String,
    pub event_type: NtmlEventType,
    pub subject_id: String,
    pub payload: Value,
}

#[derive(Debug, Clone)]
struct Sink {
    path: PathBuf,
    file: Arc<File>,
}

/// In-memory log, optionally mirrored to a line-delimited file that is
/// synced on every append.
#[derive(Debug, Clone, Default)]
pub struct NtmlLog {
    entries: Vec<NtmlEntry>,
    sink: Option<Sink>,
}

impl NtmlLog {
    pub fn in_memory() -> Self {
        NtmlLog::default()
    }

    /// Opens (creating if needed) a log file and loads its entries. A sequence
    /// gap or time regression in the file is reported, not repaired.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(&path)
            .map_err(|e| FmdsError::StorageFailure(format!("{}: {e}", path.display())))?;
        let mut entries: Vec<NtmlEntry> = Vec::new();
        for (i, line) in BufReader::new(&file).lines().enumerate() {
            let line = line.map_err(|e| FmdsError::StorageFailure(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: NtmlEntry = serde_json::from_str(&line).map_err(|e| FmdsError::MalformedRecord {
                line: i + 1,
                reason: e.to_string(),
            })?;
            let expected = entries.len() as u64 + 1;
            if entry.sequence != expected {
                return Err(FmdsError::GapDetected {
                    expected,
                    found: entry.sequence,
                });
            }
            if let Some(last) = entries.last() {
                if entry.timestamp < last.timestamp {
                    return Err(FmdsError::TimeRegression {
                        last: last.timestamp.to_iso(),
                        attempted: entry.timestamp.to_iso(),
                    });
                }
            }
            entries.push(entry);
        }
        Ok(NtmlLog {
            entries,
            sink: Some(Sink {
                path,
                file: Arc::new(file),
            }),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.sink.as_ref().map(|s| s.path.as_path())
    }

    pub fn entries(&self) -> &[NtmlEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn last(&self) -> Option<&NtmlEntry> {
        self.entries.last()
    }

    pub fn next_sequence(&self) -> u64 {
        self.entries.len() as u64 + 1
    }

    /// Checks that an entry with `timestamp` could be appended now.
    pub fn check_time(&self, timestamp: Timestamp) -> Result<()> {
        match self.entries.last() {
            Some(last) if timestamp < last.timestamp => Err(FmdsError::TimeRegression {
                last: last.timestamp.to_iso(),
                attempted: timestamp.to_iso(),
            }),
            _ => Ok(()),
        }
    }

    pub fn append(&mut self, new: NewEntry) -> Result<&NtmlEntry> {
        self.check_time(new.timestamp)?;
        let entry = NtmlEntry {
            sequence: self.next_sequence(),
            timestamp: new.timestamp,
            actor: new.actor,
            event_type: new.event_type,
            subject_id: new.subject_id,
            payload: new.payload,
        };
        self.push(entry)
    }

    /// Appends an entry produced elsewhere (e.g. by a replica of the log),
    /// which must carry the next sequence number.
    pub fn append_entry(&mut self, entry: NtmlEntry) -> Result<&NtmlEntry> {
        let expected = self.next_sequence();
        if entry.sequence != expected {
            return Err(FmdsError::GapDetected {
                expected,
                found: entry.sequence,
            });
        }
        self.check_time(entry.timestamp)?;
        self.push(entry)
    }

    fn push(&mut self, entry: NtmlEntry) -> Result<&NtmlEntry> {
        if let Some(sink) = &self.sink {
            let mut line = serde_json::to_string(&entry).map_err(|e| FmdsError::StorageFailure(e.to_string()))?;
            line.push('\n');
            let mut file: &File = &sink.file;
            file.write_all(line.as_bytes())
                .and_then(|_| file.sync_data())
                .map_err(|e| FmdsError::StorageFailure(format!("{}: {e}", sink.path.display())))?;
        }
        self.entries.push(entry);
        Ok(self.entries.last().expect("just pushed"))
    }

    pub fn query(&self, filter: &NtmlFilter) -> Vec<NtmlEntry> {
        self.entries.iter().filter(|e| filter.matches(e)).cloned().collect()
    }
}

/// Every present criterion must match; an empty filter matches everything.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NtmlFilter {
    #[serde(default)]
    pub range: Option<TimeWindow>,
    #[serde(default)]
    pub event_types: Option<BTreeSet<NtmlEventType>>,
    #[serde(default)]
    pub subject_id: Option<String>,
}

impl NtmlFilter {
    pub fn matches(&self, entry: &NtmlEntry) -> bool {
        self.range.is_none_or(|r| r.contains(entry.timestamp))
            && self.event_types.as_ref().is_none_or(|t| t.contains(&entry.event_type))
            && self.subject_id.as_ref().is_none_or(|s| *s == entry.subject_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "status", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SubjectStatus {
    Area(Designation),
    Afp(AfpStatus),
}

/// Final status of every area and AFP mentioned in a log.
pub type StatusMap = BTreeMap<String, SubjectStatus>;

/// Folds a log from sequence 1 into per-subject statuses. NOTE entries carry
/// no state.
pub fn replay(entries: &[NtmlEntry]) -> Result<StatusMap> {
    let mut state = StatusMap::new();
    for (i, entry) in entries.iter().enumerate() {
        let expected = i as u64 + 1;
        if entry.sequence != expected {
            return Err(FmdsError::GapDetected {
                expected,
                found: entry.sequence,
            });
        }
        let status = match entry.event_type {
            NtmlEventType::FeaCreated => SubjectStatus::Area(Designation::Fea),
            NtmlEventType::FcaCreated => SubjectStatus::Area(Designation::Fca),
            NtmlEventType::AfpProposed => SubjectStatus::Afp(AfpStatus::Proposed),
            NtmlEventType::AfpScheduled => SubjectStatus::Afp(AfpStatus::Scheduled),
            NtmlEventType::AfpImplemented => SubjectStatus::Afp(AfpStatus::Active),
            NtmlEventType::AfpPurged => SubjectStatus::Afp(AfpStatus::Purged),
            NtmlEventType::AfpRevised | NtmlEventType::Note => continue,
        };
        state.insert(entry.subject_id.clone(), status);
    }
    Ok(state)
}
