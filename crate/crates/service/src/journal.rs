//! Append-only JSON-lines event journal.
//!
//! Every state change is one line `{"seq":N,...,"event":{...}}`, written and
//! flushed before the change is applied or acknowledged. Startup reads the
//! whole file; any unparsable line, sequence gap, or torn final line is
//! reported with its byte offset and the service refuses to start.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use toxmarket_core::registry::Asset;
use toxmarket_core::types::TradeOutcome;
use toxmarket_core::{AccountId, AssetId, Cents, MarketId, Timestamp};

use crate::session::ApiSession;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    AssetsIngested {
        assets: Vec<Asset>,
    },
    MarketCreated {
        asset_id: AssetId,
        threshold: Cents,
        b: f64,
        cutoff: Timestamp,
        now: Timestamp,
    },
    JointMarketCreated {
        event_a: MarketId,
        event_b: MarketId,
        b: f64,
    },
    /// Account creation, starting credit and first session in one step.
    AccountOpened {
        account_id: AccountId,
        adult_attested: bool,
        starting_balance: Cents,
        session: ApiSession,
    },
    AccountCredited {
        account_id: AccountId,
        amount: Cents,
    },
    SessionIssued {
        session: ApiSession,
    },
    TradeExecuted {
        account_id: AccountId,
        market_id: MarketId,
        outcome: TradeOutcome,
        spend: Cents,
        now: Timestamp,
    },
    MarketsHalted {
        now: Timestamp,
    },
    MarketSettled {
        market_id: MarketId,
        announced: Cents,
        now: Timestamp,
    },
}

/// Ties a journaled event to the client retry key that produced it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdempotencyTag {
    /// Who may replay the key: an account id or `admin`.
    pub scope: String,
    pub key: String,
    /// Canonical form of the request; a reused key must match it.
    pub fingerprint: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub seq: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idempotency: Option<IdempotencyTag>,
    pub event: Event,
}

impl Record {
    pub fn to_line(&self) -> Vec<u8> {
        let mut line = serde_json::to_vec(self).expect("records always serialize");
        line.push(b'\n');
        line
    }
}

#[derive(Debug, thiserror::Error)]
pub enum JournalError {
    #[error("journal i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt journal at byte offset {offset} (line {line}): {reason}")]
    Corrupt { offset: u64, line: u64, reason: String },
    #[error("journal record {seq} at byte offset {offset} cannot be replayed: {reason}")]
    Replay { seq: u64, offset: u64, reason: String },
}

/// A parsed record and where it starts in the file.
#[derive(Clone, Debug, PartialEq)]
pub struct Located {
    pub offset: u64,
    pub record: Record,
}

/// Reads and validates every record. Sequence numbers must run 1, 2, 3, ...
pub fn read_records<R: BufRead>(mut input: R) -> Result<Vec<Located>, JournalError> {
    let mut out = Vec::new();
    let mut offset = 0u64;
    let mut line_no = 0u64;
    let mut buf = Vec::new();
    loop {
        buf.clear();
        let n = input.read_until(b'\n', &mut buf)?;
        if n == 0 {
            break;
        }
        line_no += 1;
        let corrupt = |reason: String| JournalError::Corrupt {
            offset,
            line: line_no,
            reason,
        };
        if buf.last() != Some(&b'\n') {
            return Err(corrupt("torn final record (no trailing newline)".into()));
        }
        let record: Record = serde_json::from_slice(&buf[..n - 1]).map_err(|e| corrupt(e.to_string()))?;
        let expected = out.len() as u64 + 1;
        if record.seq != expected {
            return Err(corrupt(format!("expected sequence {expected}, found {}", record.seq)));
        }
        out.push(Located { offset, record });
        offset += n as u64;
    }
    Ok(out)
}

/// Destination for journal records.
pub trait EventLog: Send {
    /// Durably appends one record; on error nothing may be left behind.
    fn append(&mut self, record: &Record) -> io::Result<()>;
}

pub struct FileJournal {
    file: File,
    path: PathBuf,
    len: u64,
    fsync: bool,
    poisoned: bool,
}

impl FileJournal {
    /// Opens (creating if needed) the journal at `path` and returns it with
    /// the records already in it.
    pub fn open(path: &Path, fsync: bool) -> Result<(Self, Vec<Located>), JournalError> {
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(path)?;
        let records = read_records(BufReader::new(&mut file))?;
        let len = file.seek(SeekFrom::End(0))?;
        Ok((
            Self {
                file,
                path: path.to_owned(),
                len,
                fsync,
                poisoned: false,
            },
            records,
        ))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl EventLog for FileJournal {
    fn append(&mut self, record: &Record) -> io::Result<()> {
        if self.poisoned {
            return Err(io::Error::other("journal is unusable after a failed rollback"));
        }
        let line = record.to_line();
        let written = self.file.write_all(&line).and_then(|_| {
            if self.fsync {
                self.file.sync_data()
            } else {
                self.file.flush()
            }
        });
        match written {
            Ok(()) => {
                self.len += line.len() as u64;
                Ok(())
            }
            Err(e) => {
                // Cut any partial line so the file stays replayable.
                if self.file.set_len(self.len).is_err() {
                    self.poisoned = true;
                }
                Err(e)
            }
        }
    }
}

/// In-memory journal; clones share the same buffer.
#[derive(Clone, Default)]
pub struct MemoryJournal {
    bytes: Arc<Mutex<Vec<u8>>>,
}

impl MemoryJournal {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bytes(&self) -> Vec<u8> {
        self.bytes.lock().expect("journal buffer").clone()
    }
}

impl EventLog for MemoryJournal {
    fn append(&mut self, record: &Record) -> io::Result<()> {
        self.bytes.lock().expect("journal buffer").extend(record.to_line());
        Ok(())
    }
}

/// Journal that accepts `remaining` appends and then fails every one.
#[derive(Clone, Default)]
pub struct FailingJournal {
    inner: MemoryJournal,
    remaining: Arc<Mutex<usize>>,
}

impl FailingJournal {
    pub fn after(appends: usize) -> Self {
        Self {
            inner: MemoryJournal::new(),
            remaining: Arc::new(Mutex::new(appends)),
        }
    }

    pub fn bytes(&self) -> Vec<u8> {
        self.inner.bytes()
    }
}

impl EventLog for FailingJournal {
    fn append(&mut self, record: &Record) -> io::Result<()> {
        let mut left = self.remaining.lock().expect("counter");
        if *left == 0 {
            return Err(io::Error::other("injected journal failure"));
        }
        *left -= 1;
        self.inner.append(record)
    }
}
