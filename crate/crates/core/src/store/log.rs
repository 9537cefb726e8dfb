use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, SecondsFormat, TimeDelta, Utc};
use thiserror::Error;

use super::event::{EventBody, TelemetryEvent};
use super::snapshot::{FoldError, MissionSnapshot};
use crate::model::Seconds;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("storage i/o: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt record at seq {seq}: {detail}")]
    Corrupt { seq: u64, detail: String },
    #[error("inconsistent record at seq {seq}: {source}")]
    Inconsistent { seq: u64, source: FoldError },
    #[error("seq {from} is beyond the log head ({next} events)")]
    OutOfRange { from: u64, next: u64 },
    #[error("failed to encode event: {0}")]
    Encode(#[from] serde_json::Error),
}

/// Source of the `wall` stamp on each event.
#[derive(Debug, Clone)]
pub enum WallClock {
    System,
    /// Deterministic: `epoch + at / time_scale`.
    Simulated { epoch: DateTime<Utc>, time_scale: f64 },
}

impl WallClock {
    pub fn simulated(time_scale: f64) -> Self {
        let epoch = DateTime::parse_from_rfc3339("2024-01-01T00:00:00Z").expect("valid epoch").to_utc();
        WallClock::Simulated { epoch, time_scale }
    }

    pub fn stamp(&self, at: Seconds) -> String {
        let t = match self {
            WallClock::System => Utc::now(),
            WallClock::Simulated { epoch, time_scale } => {
                let ms = (at / time_scale * 1000.0).round() as i64;
                *epoch + TimeDelta::milliseconds(ms)
            }
        };
        t.to_rfc3339_opts(SecondsFormat::Millis, true)
    }
}

/// Append-only event log with an in-memory snapshot kept in step.
pub struct Store {
    events: Vec<TelemetryEvent>,
    snapshot: MissionSnapshot,
    sink: Option<BufWriter<File>>,
    clock: WallClock,
}

impl Store {
    pub fn in_memory(clock: WallClock) -> Self {
        Self { events: Vec::new(), snapshot: MissionSnapshot::default(), sink: None, clock }
    }

    /// Start a fresh log file, truncating any previous content.
    pub fn create(path: &Path, clock: WallClock) -> Result<Self, StoreError> {
        let file = File::create(path)?;
        Ok(Self { sink: Some(BufWriter::new(file)), ..Self::in_memory(clock) })
    }

    /// Reopen a persisted log; new events continue after its last seq.
    pub fn open(path: &Path, clock: WallClock) -> Result<Self, StoreError> {
        let events = read_log(BufReader::new(File::open(path)?))?;
        let snapshot = replay(&events)?;
        let file = OpenOptions::new().append(true).open(path)?;
        Ok(Self { events, snapshot, sink: Some(BufWriter::new(file)), clock })
    }

    pub fn append(&mut self, at: Seconds, body: EventBody) -> Result<u64, StoreError> {
        let seq = self.snapshot.next_seq();
        let event = TelemetryEvent { seq, at, wall: self.clock.stamp(at), body };
        self.snapshot
            .apply(&event)
            .map_err(|source| StoreError::Inconsistent { seq, source })?;
        if let Some(sink) = &mut self.sink {
            serde_json::to_writer(&mut *sink, &event)?;
            sink.write_all(b"\n")?;
            sink.flush()?;
        }
        self.events.push(event);
        Ok(seq)
    }

    pub fn snapshot(&self) -> &MissionSnapshot {
        &self.snapshot
    }

    pub fn events(&self) -> &[TelemetryEvent] {
        &self.events
    }

    /// Number of events appended so far (the next seq).
    pub fn len(&self) -> u64 {
        self.events.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn events_from(&self, from: u64) -> Result<&[TelemetryEvent], StoreError> {
        let next = self.len();
        if from > next {
            return Err(StoreError::OutOfRange { from, next });
        }
        Ok(&self.events[from as usize..])
    }

    pub fn clock(&self) -> &WallClock {
        &self.clock
    }
}

/// Fold `events` into a snapshot from the empty state.
pub fn replay(events: &[TelemetryEvent]) -> Result<MissionSnapshot, StoreError> {
    let mut snap = MissionSnapshot::default();
    for e in events {
        snap.apply(e).map_err(|source| StoreError::Inconsistent { seq: e.seq, source })?;
    }
    Ok(snap)
}

/// Parse a JSONL log. A bad line is reported at the seq it should have had.
pub fn read_log(reader: impl BufRead) -> Result<Vec<TelemetryEvent>, StoreError> {
    let mut events = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let seq = events.len() as u64;
        if line.trim().is_empty() {
            continue;
        }
        let event: TelemetryEvent = serde_json::from_str(&line)
            .map_err(|e| StoreError::Corrupt { seq, detail: e.to_string() })?;
        if event.seq != seq {
            return Err(StoreError::Corrupt { seq, detail: format!("record carries seq {}", event.seq) });
        }
        events.push(event);
    }
    Ok(events)
}

pub fn read_log_file(path: &Path) -> Result<Vec<TelemetryEvent>, StoreError> {
    read_log(BufReader::new(File::open(path)?))
}

/// Serialize events exactly as the store writes them.
pub fn write_log(events: &[TelemetryEvent], mut out: impl Write) -> Result<(), StoreError> {
    for e in events {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
