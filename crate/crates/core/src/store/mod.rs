//! Event-sourced mission database.
//!
//! The log is newline-delimited JSON, one `{seq, at, wall, kind, payload}`
//! record per line. All mission state is a fold of that log; the [`Store`]
//! keeps the fold current as it appends.

mod event;
mod log;
mod snapshot;

pub use event::{
    Alert, AlertLevel, ArtifactEvent, CourseEntry, CursorSample, EventBody, EventKind, GateEvent, MissionEvent,
    MissionPhase, PlanEvent, TaskStatusChange, TelemetryEvent, ViewSwitch,
};
pub use log::{read_log, read_log_file, replay, write_log, Store, StoreError, WallClock};
pub use snapshot::{FoldError, MissionSnapshot};
