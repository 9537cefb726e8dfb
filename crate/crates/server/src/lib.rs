//! HTTP front end for mission control.
//!
//! Request/response endpoints carry JSON; the event log is streamed as
//! server-sent events with the log seq as the event id. All mutations go
//! through one mutex around [`MissionControl`], so the store keeps a single
//! writer. Stream subscribers read the log on their own schedule and are
//! woken through a watch channel, so a slow client never holds up a write.
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | GET | `/state` | | snapshot plus `next_seq` |
//! | GET | `/events?from=k` | | SSE, one event per log record from seq `k` |
//! | POST | `/command` | `OperatorCommand` | `CommandAck` |
//! | POST | `/artifacts/{id}/review` | `ReviewAction` | `ArtifactReport` |
//! | POST | `/telemetry` | `TelemetryBatch` | `{"seqs": [..]}` |
//! | POST | `/mission/start` | | `CommandAck` |
//!
//! Failures reply with `{"error": kind, "message": text}`.

use std::convert::Infallible;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Duration;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use copilot_core::service::{
    drive_operator, ArtifactReport, AutoOperator, CommandAck, MissionControl, OperatorCommand, ReviewAction,
    ServiceError, TelemetryBatch,
};
use copilot_core::store::{MissionPhase, StoreError, TelemetryEvent};
use futures::stream::{self, Stream};
use serde::{Deserialize, Serialize};
use tokio::sync::watch;

/// Records handed to one subscriber per wake-up.
const STREAM_CHUNK: usize = 256;

/// Shared handle to the running mission.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Shared>,
}

struct Shared {
    control: Mutex<Driven>,
    head: watch::Sender<u64>,
}

struct Driven {
    control: MissionControl,
    operator: Option<AutoOperator>,
}

impl AppState {
    pub fn new(control: MissionControl) -> Self {
        Self::build(control, None)
    }

    /// Mission whose gates and reviews are answered by a scripted operator.
    pub fn with_operator(control: MissionControl, operator: AutoOperator) -> Self {
        Self::build(control, Some(operator))
    }

    fn build(control: MissionControl, operator: Option<AutoOperator>) -> Self {
        let (head, _) = watch::channel(control.store().len());
        Self { inner: Arc::new(Shared { control: Mutex::new(Driven { control, operator }), head }) }
    }

    fn lock(&self) -> MutexGuard<'_, Driven> {
        self.inner.control.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Run `f` against mission control and wake the stream subscribers.
    pub fn with_control<T>(&self, f: impl FnOnce(&mut MissionControl) -> T) -> T {
        let mut guard = self.lock();
        let out = f(&mut guard.control);
        self.publish(&guard.control);
        out
    }

    fn publish(&self, control: &MissionControl) {
        self.inner.head.send_replace(control.store().len());
    }

    /// Advance the mission by `dt`, letting the scripted operator act
    /// first when there is one. Returns whether the mission has ended.
    pub fn step(&self, dt: f64) -> Result<bool, ServiceError> {
        let mut guard = self.lock();
        let Driven { control, operator } = &mut *guard;
        let result = (|| {
            if let Some(op) = operator {
                drive_operator(control, op)?;
            }
            control.tick(dt)
        })();
        self.publish(control);
        result.map(|_| control.is_finished())
    }

    /// Events from `from` onward, at most `limit`, plus whether the mission
    /// has ended.
    fn read(&self, from: u64, limit: usize) -> Result<(Vec<TelemetryEvent>, bool), ServiceError> {
        let guard = self.lock();
        let events = guard.control.events_from(from)?;
        let done = guard.control.snapshot().phase == MissionPhase::Ended;
        Ok((events.iter().take(limit).cloned().collect(), done))
    }
}

/// Tick the mission in the background until it ends. `period` is the wall
/// time between ticks and `dt` the mission time each one advances.
pub fn spawn_ticker(state: AppState, dt: f64, period: Duration) -> tokio::task::JoinHandle<Result<(), ServiceError>> {
    tokio::spawn(async move {
        let mut interval = tokio::time::interval(period);
        interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
        loop {
            interval.tick().await;
            match state.step(dt) {
                Ok(true) => return Ok(()),
                Ok(false) => {}
                Err(e) => {
                    tracing::error!("mission tick failed: {e}");
                    return Err(e);
                }
            }
        }
    })
}

/// Serve the API on `listener` until the process stops.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/state", get(get_state))
        .route("/events", get(get_events))
        .route("/command", post(post_command))
        .route("/artifacts/{id}/review", post(post_review))
        .route("/telemetry", post(post_telemetry))
        .route("/mission/start", post(post_start))
        .with_state(state)
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

pub struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        Self(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, kind) = match &self.0 {
            ServiceError::IllegalPhase { .. } => (StatusCode::CONFLICT, "illegal-phase"),
            ServiceError::UnknownTarget(_) => (StatusCode::NOT_FOUND, "unknown-target"),
            ServiceError::BudgetExhausted => (StatusCode::CONFLICT, "budget-exhausted"),
            ServiceError::Rejected(_) => (StatusCode::UNPROCESSABLE_ENTITY, "rejected"),
            ServiceError::Telemetry(_) => (StatusCode::BAD_REQUEST, "telemetry"),
            ServiceError::Store(StoreError::OutOfRange { .. }) => (StatusCode::BAD_REQUEST, "out-of-range"),
            ServiceError::Store(_) => (StatusCode::INTERNAL_SERVER_ERROR, "store"),
        };
        let body = ErrorBody { error: kind.to_string(), message: self.0.to_string() };
        (status, Json(body)).into_response()
    }
}

async fn get_state(State(state): State<AppState>) -> Response {
    let guard = state.lock();
    Json(guard.control.state()).into_response()
}

#[derive(Debug, Deserialize)]
struct EventsQuery {
    #[serde(default)]
    from: u64,
}

async fn get_events(
    State(state): State<AppState>,
    Query(q): Query<EventsQuery>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    // Reject a cursor past the head before the stream starts.
    state.read(q.from, 0)?;
    Ok(Sse::new(event_stream(state, q.from)).keep_alive(KeepAlive::default()))
}

/// Every record from `from` onward, in order; closes once the mission has
/// ended and the subscriber has caught up.
fn event_stream(state: AppState, from: u64) -> impl Stream<Item = Result<Event, Infallible>> {
    let head = state.inner.head.subscribe();
    let pending: std::vec::IntoIter<TelemetryEvent> = Vec::new().into_iter();
    stream::unfold((state, head, from, pending), |(state, mut head, mut cursor, mut pending)| async move {
        loop {
            if let Some(e) = pending.next() {
                return Some((Ok(to_sse(&e)), (state, head, cursor, pending)));
            }
            head.borrow_and_update();
            let (batch, done) = state.read(cursor, STREAM_CHUNK).ok()?;
            if batch.is_empty() {
                if done {
                    return None;
                }
                head.changed().await.ok()?;
                continue;
            }
            cursor += batch.len() as u64;
            pending = batch.into_iter();
        }
    })
}

fn to_sse(e: &TelemetryEvent) -> Event {
    let data = serde_json::to_string(e).expect("events serialize");
    Event::default().id(e.seq.to_string()).event(e.body.kind().as_str()).data(data)
}

async fn post_command(
    State(state): State<AppState>,
    Json(cmd): Json<OperatorCommand>,
) -> Result<Json<CommandAck>, ApiError> {
    let ack = state.with_control(|c| {
        let ack = c.apply_command(cmd)?;
        c.replan_now()?;
        Ok::<_, ServiceError>(ack)
    })?;
    Ok(Json(ack))
}

async fn post_review(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(action): Json<ReviewAction>,
) -> Result<Json<ArtifactReport>, ApiError> {
    Ok(Json(state.with_control(|c| c.review_artifact(&id, action))?))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TelemetryAck {
    pub seqs: Vec<u64>,
}

async fn post_telemetry(
    State(state): State<AppState>,
    Json(batch): Json<TelemetryBatch>,
) -> Result<Json<TelemetryAck>, ApiError> {
    let seqs = state.with_control(|c| c.ingest_telemetry(batch))?;
    Ok(Json(TelemetryAck { seqs }))
}

async fn post_start(State(state): State<AppState>) -> Result<Json<CommandAck>, ApiError> {
    let ack = state.with_control(|c| {
        let ack = c.start()?;
        c.replan_now()?;
        Ok::<_, ServiceError>(ack)
    })?;
    Ok(Json(ack))
}
