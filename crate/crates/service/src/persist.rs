//! Append-only JSON-lines persistence.
//!
//! `consumed.jsonl` holds one `{"hash": …}` per consumed send, synced before
//! `consume` returns. `sessions.jsonl` holds `{"event": …, "session": …}`
//! records carrying the full session after each transition; the last record
//! for an id is its current state. A final line without its newline is a
//! write cut short by a crash: it is dropped and the file truncated. Any other
//! unparsable line stops startup.

use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use xnogate_core::{
    BlockHash, ConsumedHashStore, Journal, Session, SessionEvent, SessionId, SessionState,
    StoreError,
};

pub const SESSIONS_FILE: &str = "sessions.jsonl";
pub const CONSUMED_FILE: &str = "consumed.jsonl";

#[derive(Debug, Error)]
pub enum RecoveryError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path} line {line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

#[derive(Serialize, Deserialize)]
struct HashRecord {
    hash: BlockHash,
}

#[derive(Serialize, Deserialize)]
struct SessionRecord<S> {
    event: SessionEvent,
    session: S,
}

/// Reads every complete line of `path`, dropping and truncating a torn tail.
/// Returns the lines and whether a tail was dropped.
fn read_lines(path: &Path) -> Result<(Vec<String>, bool), RecoveryError> {
    let io = |e: std::io::Error| RecoveryError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut file = match OpenOptions::new().read(true).write(true).open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok((vec![], false)),
        Err(e) => return Err(io(e)),
    };
    let mut bytes = vec![];
    file.read_to_end(&mut bytes).map_err(io)?;
    let complete = bytes.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1);
    let torn = complete < bytes.len();
    if torn {
        file.set_len(complete as u64).map_err(io)?;
        file.sync_all().map_err(io)?;
    }
    let text = std::str::from_utf8(&bytes[..complete]).map_err(|e| RecoveryError::Corrupt {
        path: path.to_path_buf(),
        line: 1 + bytes[..e.valid_up_to()]
            .iter()
            .filter(|b| **b == b'\n')
            .count(),
        message: "not UTF-8".into(),
    })?;
    Ok((text.lines().map(String::from).collect(), torn))
}

fn append_handle(path: &Path) -> Result<File, RecoveryError> {
    OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| RecoveryError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

/// Consumed-hash set backed by `consumed.jsonl`.
pub struct DurableHashStore {
    inner: Mutex<(HashSet<BlockHash>, File)>,
}

impl DurableHashStore {
    fn new(set: HashSet<BlockHash>, file: File) -> Self {
        DurableHashStore {
            inner: Mutex::new((set, file)),
        }
    }
}

impl ConsumedHashStore for DurableHashStore {
    fn consume(&self, hash: &BlockHash) -> Result<bool, StoreError> {
        let mut guard = self.inner.lock().unwrap();
        let (set, file) = &mut *guard;
        if set.contains(hash) {
            return Ok(false);
        }
        let mut line = serde_json::to_string(&HashRecord { hash: *hash }).expect("serializes");
        line.push('\n');
        file.write_all(line.as_bytes())?;
        file.sync_data()?;
        set.insert(*hash);
        Ok(true)
    }

    fn contains(&self, hash: &BlockHash) -> bool {
        self.inner.lock().unwrap().0.contains(hash)
    }

    fn snapshot(&self) -> Vec<BlockHash> {
        let mut all: Vec<_> = self.inner.lock().unwrap().0.iter().copied().collect();
        all.sort();
        all
    }
}

/// Session journal backed by `sessions.jsonl`.
pub struct SessionLog {
    file: Mutex<File>,
}

impl Journal for SessionLog {
    fn record(&self, event: SessionEvent, session: &Session) -> Result<(), StoreError> {
        let mut line =
            serde_json::to_string(&SessionRecord { event, session }).expect("serializes");
        line.push('\n');
        let mut file = self.file.lock().unwrap();
        file.write_all(line.as_bytes())?;
        if matches!(event, SessionEvent::Granted | SessionEvent::Failed) {
            file.sync_data()?;
        }
        Ok(())
    }
}

/// What a startup found on disk.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct RecoveryReport {
    pub sessions: usize,
    pub consumed_hashes: usize,
    pub torn_lines_dropped: usize,
}

pub struct Recovered {
    pub store: DurableHashStore,
    pub journal: SessionLog,
    /// Latest state of every session, ordered by id.
    pub sessions: Vec<Session>,
    pub report: RecoveryReport,
}

/// Replays both logs under `data_dir` (creating it if needed) and opens them for appending.
pub fn recover_from_log(data_dir: &Path) -> Result<Recovered, RecoveryError> {
    std::fs::create_dir_all(data_dir).map_err(|e| RecoveryError::Io {
        path: data_dir.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut report = RecoveryReport::default();

    let consumed_path = data_dir.join(CONSUMED_FILE);
    let (lines, torn) = read_lines(&consumed_path)?;
    report.torn_lines_dropped += torn as usize;
    let mut consumed = HashSet::new();
    for (i, line) in lines.iter().enumerate() {
        let rec: HashRecord = serde_json::from_str(line).map_err(|e| RecoveryError::Corrupt {
            path: consumed_path.clone(),
            line: i + 1,
            message: e.to_string(),
        })?;
        consumed.insert(rec.hash);
    }

    let sessions_path = data_dir.join(SESSIONS_FILE);
    let (lines, torn) = read_lines(&sessions_path)?;
    report.torn_lines_dropped += torn as usize;
    let mut sessions: BTreeMap<SessionId, Session> = BTreeMap::new();
    for (i, line) in lines.iter().enumerate() {
        let corrupt = |message: String| RecoveryError::Corrupt {
            path: sessions_path.clone(),
            line: i + 1,
            message,
        };
        let rec: SessionRecord<Session> =
            serde_json::from_str(line).map_err(|e| corrupt(e.to_string()))?;
        let expected = match rec.event {
            SessionEvent::Created => SessionState::AwaitingOwnership,
            SessionEvent::OwnershipVerified => SessionState::AwaitingPayment,
            SessionEvent::Granted => SessionState::Granted,
            SessionEvent::Expired => SessionState::Expired,
            SessionEvent::Failed => SessionState::Failed,
        };
        if rec.session.state != expected {
            return Err(corrupt(format!(
                "event {:?} with state {}",
                rec.event,
                rec.session.state.as_str()
            )));
        }
        match sessions.get(&rec.session.id) {
            None if rec.event != SessionEvent::Created => {
                return Err(corrupt(format!(
                    "session {} has no creation record",
                    rec.session.id
                )))
            }
            Some(_) if rec.event == SessionEvent::Created => {
                return Err(corrupt(format!("session {} created twice", rec.session.id)))
            }
            Some(prev) if !prev.state.can_move_to(rec.session.state) => {
                return Err(corrupt(format!(
                    "session {} moves {} -> {}",
                    rec.session.id,
                    prev.state.as_str(),
                    rec.session.state.as_str()
                )))
            }
            _ => {}
        }
        if let Some(hash) = rec.session.consumed_send_hash {
            // The hash record is written first, so this only matters for a hand-edited log.
            consumed.insert(hash);
        }
        sessions.insert(rec.session.id, rec.session);
    }

    report.sessions = sessions.len();
    report.consumed_hashes = consumed.len();
    Ok(Recovered {
        store: DurableHashStore::new(consumed, append_handle(&consumed_path)?),
        journal: SessionLog {
            file: Mutex::new(append_handle(&sessions_path)?),
        },
        sessions: sessions.into_values().collect(),
        report,
    })
}
