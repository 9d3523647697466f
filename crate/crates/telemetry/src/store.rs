//! Append-only channel log: one JSON object per line, fsynced per entry.
//!
//! The in-memory index is rebuilt from the file on open. A final line
//! without its newline is the residue of an interrupted append; it was
//! never acknowledged, so it is cut off.

use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, Utc};
use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FIELD_COUNT: usize = 8;

pub type FieldValues = [Option<String>; FIELD_COUNT];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub entry_id: u64,
    pub created_at: DateTime<Utc>,
    /// Decimal text exactly as received.
    pub fields: FieldValues,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}, line {line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("created_at {at} precedes the latest entry ({latest})")]
    OutOfOrder {
        at: DateTime<Utc>,
        latest: DateTime<Utc>,
    },
    #[error("update within {interval}s of the previous entry; retry in {retry_after}s")]
    RateLimited { interval: i64, retry_after: i64 },
}

struct Appender {
    file: File,
    next_id: u64,
    latest: Option<DateTime<Utc>>,
}

pub struct ChannelLog {
    path: PathBuf,
    appender: Mutex<Appender>,
    committed: RwLock<Vec<Entry>>,
}

impl ChannelLog {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        let io = |source| StoreError::Io {
            path: path.clone(),
            source,
        };
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)
            .map_err(io)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes).map_err(io)?;

        let complete = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        if complete < bytes.len() {
            file.set_len(complete as u64).map_err(io)?;
            file.sync_all().map_err(io)?;
        }
        file.seek(SeekFrom::End(0)).map_err(io)?;

        let mut entries: Vec<Entry> = Vec::new();
        for (i, line) in bytes[..complete].split(|&b| b == b'\n').enumerate() {
            if line.is_empty() {
                continue;
            }
            let corrupt = |message: String| StoreError::Corrupt {
                path: path.clone(),
                line: i + 1,
                message,
            };
            let entry: Entry = serde_json::from_slice(line).map_err(|e| corrupt(e.to_string()))?;
            let expected = entries.len() as u64 + 1;
            if entry.entry_id != expected {
                return Err(corrupt(format!(
                    "entry_id {} where {expected} was expected",
                    entry.entry_id
                )));
            }
            if entries
                .last()
                .is_some_and(|prev| entry.created_at < prev.created_at)
            {
                return Err(corrupt("created_at goes backwards".into()));
            }
            entries.push(entry);
        }

        Ok(Self {
            appender: Mutex::new(Appender {
                file,
                next_id: entries.len() as u64 + 1,
                latest: entries.last().map(|e| e.created_at),
            }),
            committed: RwLock::new(entries),
            path,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends one entry and returns it once it is on disk. Entries must
    /// not go back in time and, when `min_interval` is positive, must be
    /// at least that far apart.
    pub fn append(
        &self,
        fields: FieldValues,
        created_at: DateTime<Utc>,
        min_interval: Duration,
    ) -> Result<Entry, StoreError> {
        let mut app = self.appender.lock();
        if let Some(latest) = app.latest {
            if created_at < latest {
                return Err(StoreError::OutOfOrder {
                    at: created_at,
                    latest,
                });
            }
            let elapsed = created_at - latest;
            if min_interval > Duration::zero() && elapsed < min_interval {
                return Err(StoreError::RateLimited {
                    interval: min_interval.num_seconds(),
                    retry_after: (min_interval - elapsed).num_seconds().max(1),
                });
            }
        }
        let entry = Entry {
            entry_id: app.next_id,
            created_at,
            fields,
        };
        let mut line = serde_json::to_vec(&entry).expect("entry serializes");
        line.push(b'\n');
        let io = |source| StoreError::Io {
            path: self.path.clone(),
            source,
        };
        app.file.write_all(&line).map_err(io)?;
        app.file.sync_data().map_err(io)?;
        app.next_id += 1;
        app.latest = Some(created_at);
        // published while the appender is still held, so readers see ids in order
        self.committed.write().push(entry.clone());
        Ok(entry)
    }

    pub fn len(&self) -> usize {
        self.committed.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn latest(&self) -> Option<Entry> {
        self.committed.read().last().cloned()
    }

    pub fn all(&self) -> Vec<Entry> {
        self.committed.read().clone()
    }

    pub fn last_n(&self, n: usize) -> Vec<Entry> {
        let entries = self.committed.read();
        entries[entries.len().saturating_sub(n)..].to_vec()
    }

    /// Entries with `start ≤ created_at ≤ end`.
    pub fn range(&self, start: Option<DateTime<Utc>>, end: Option<DateTime<Utc>>) -> Vec<Entry> {
        let entries = self.committed.read();
        let lo = start.map_or(0, |s| entries.partition_point(|e| e.created_at < s));
        let hi = end.map_or(entries.len(), |e| {
            entries.partition_point(|x| x.created_at <= e)
        });
        entries[lo..hi.max(lo)].to_vec()
    }

    /// Newest entry at or before `now` holding field `index`.
    pub fn latest_with_field(&self, index: usize, now: DateTime<Utc>) -> Option<Entry> {
        let entries = self.committed.read();
        let upto = entries.partition_point(|e| e.created_at <= now);
        entries[..upto]
            .iter()
            .rev()
            .find(|e| e.fields[index].is_some())
            .cloned()
    }
}
