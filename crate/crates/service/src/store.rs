//! On-disk state: the scenario the engine started from, a journal of every
//! committed command, and the NTML mirror.
//!
//! The journal is the commit point. Recovery rebuilds the engine by
//! replaying it, then checks that the NTML file is a prefix of the rebuilt
//! log and appends whatever is missing.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use fmds_core::engine::{Command, Engine, StreamEvent};
use fmds_core::error::FmdsError;
use fmds_core::ntml::{NtmlEntry, NtmlLog};
use fmds_core::schedule::{ConstraintOverlay, Flight};
use fmds_core::time::Timestamp;
use serde::{Deserialize, Serialize};

use crate::error::StartupError;

pub const SCENARIO_FILE: &str = "scenario.json";
pub const JOURNAL_FILE: &str = "journal.jsonl";
pub const NTML_FILE: &str = "ntml.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub start: Timestamp,
    pub flights: Vec<Flight>,
    pub overlays: Vec<ConstraintOverlay>,
}

#[derive(Debug, Serialize, Deserialize)]
struct JournalRecord {
    actor: String,
    command: Command,
}

pub struct Store {
    dir: PathBuf,
    journal: File,
    ntml: NtmlLog,
    /// Set when a write failed after the journal commit; further commands
    /// are refused until a restart reconciles the files.
    degraded: Option<String>,
}

pub struct Recovered {
    pub engine: Engine,
    pub history: Vec<StreamEvent>,
    pub store: Store,
    pub replayed: usize,
}

fn corrupt(msg: impl Into<String>) -> StartupError {
    StartupError::CorruptLog(msg.into())
}

/// Drops a trailing partial line left by a crash mid-write.
fn trim_torn_tail(path: &Path) -> Result<(), StartupError> {
    let Ok(bytes) = fs::read(path) else { return Ok(()) };
    if bytes.is_empty() || bytes.ends_with(b"\n") {
        return Ok(());
    }
    let keep = bytes.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1);
    tracing::warn!(file = %path.display(), dropped = bytes.len() - keep, "dropping torn final line");
    let f = OpenOptions::new().write(true).open(path).map_err(FmdsError::from)?;
    f.set_len(keep as u64).map_err(FmdsError::from)?;
    f.sync_all().map_err(FmdsError::from)?;
    Ok(())
}

fn write_atomically(path: &Path, bytes: &[u8]) -> Result<(), FmdsError> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    if let Some(parent) = path.parent() {
        File::open(parent)?.sync_all()?;
    }
    Ok(())
}

impl Store {
    /// Opens `dir`, creating it and its scenario (via `init`) on first use,
    /// and replays the journal.
    pub fn open(dir: &Path, init: impl FnOnce() -> Result<Scenario, StartupError>) -> Result<Recovered, StartupError> {
        fs::create_dir_all(dir).map_err(|e| StartupError::Config(format!("data dir {}: {e}", dir.display())))?;
        let scenario_path = dir.join(SCENARIO_FILE);
        let scenario: Scenario = if scenario_path.exists() {
            let text = fs::read_to_string(&scenario_path).map_err(FmdsError::from)?;
            serde_json::from_str(&text).map_err(|e| corrupt(format!("{}: {e}", scenario_path.display())))?
        } else {
            let scenario = init()?;
            let bytes = serde_json::to_vec(&scenario).map_err(|e| FmdsError::StorageFailure(e.to_string()))?;
            write_atomically(&scenario_path, &bytes)?;
            scenario
        };

        let mut engine = Engine::new(scenario.flights, scenario.overlays, scenario.start);
        let journal_path = dir.join(JOURNAL_FILE);
        trim_torn_tail(&journal_path)?;
        let mut history = Vec::new();
        let mut replayed = 0;
        if journal_path.exists() {
            let reader = BufReader::new(File::open(&journal_path).map_err(FmdsError::from)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(FmdsError::from)?;
                if line.trim().is_empty() {
                    continue;
                }
                let record: JournalRecord =
                    serde_json::from_str(&line).map_err(|e| corrupt(format!("journal line {}: {e}", i + 1)))?;
                let (_, events) = engine
                    .execute(&record.actor, record.command)
                    .map_err(|e| corrupt(format!("journal line {} no longer applies: {e}", i + 1)))?;
                history.extend(events);
                replayed += 1;
            }
        }

        let ntml_path = dir.join(NTML_FILE);
        trim_torn_tail(&ntml_path)?;
        let mut ntml = NtmlLog::open(&ntml_path).map_err(|e| corrupt(format!("{}: {e}", ntml_path.display())))?;
        let expected = engine.ntml().entries();
        if ntml.len() > expected.len() || ntml.entries() != &expected[..ntml.len()] {
            let at = ntml
                .entries()
                .iter()
                .zip(expected)
                .position(|(a, b)| a != b)
                .map_or(expected.len() + 1, |i| i + 1);
            return Err(corrupt(format!(
                "{} disagrees with the journal at sequence {at}",
                ntml_path.display()
            )));
        }
        let missing = expected[ntml.len()..].to_vec();
        if !missing.is_empty() {
            tracing::info!(entries = missing.len(), "restoring NTML tail from journal");
        }
        for entry in missing {
            ntml.append_entry(entry)?;
        }

        let journal = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&journal_path)
            .map_err(FmdsError::from)?;
        Ok(Recovered {
            engine,
            history,
            store: Store {
                dir: dir.to_path_buf(),
                journal,
                ntml,
                degraded: None,
            },
            replayed,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Refuses work while degraded.
    pub fn check_writable(&self) -> Result<(), FmdsError> {
        match &self.degraded {
            Some(why) => Err(FmdsError::StorageFailure(format!(
                "store degraded, restart required: {why}"
            ))),
            None => Ok(()),
        }
    }

    /// Durably records a command that succeeded in memory. An error before
    /// the journal write means nothing was committed; `Ok(Some(_))` means
    /// the command is committed but the NTML mirror lags until restart.
    pub fn commit(
        &mut self,
        actor: &str,
        command: &Command,
        entries: &[NtmlEntry],
    ) -> Result<Option<FmdsError>, FmdsError> {
        self.check_writable()?;
        let mut line = serde_json::to_string(&JournalRecord {
            actor: actor.to_string(),
            command: command.clone(),
        })
        .map_err(|e| FmdsError::StorageFailure(e.to_string()))?;
        line.push('\n');
        self.journal
            .write_all(line.as_bytes())
            .and_then(|_| self.journal.sync_data())
            .map_err(|e| FmdsError::StorageFailure(format!("journal: {e}")))?;
        for entry in entries {
            if let Err(e) = self.ntml.append_entry(entry.clone()) {
                self.degraded = Some(e.to_string());
                return Ok(Some(e));
            }
        }
        Ok(None)
    }

    pub fn sync(&self) -> Result<(), FmdsError> {
        self.journal.sync_all()?;
        Ok(())
    }
}
