use std::fmt;

use serde::{Deserialize, Serialize};

use crate::executor::{ExecPhase, GateDecision, GateRequest, TaskError, TaskRuntime};
use crate::model::{InstanceId, PhaseWindows, ResourceLimits, RobotId, Seconds, TaskGraph, TaskStatus};
use crate::planner::{RelaxationReport, Schedule, Trigger};
use crate::service::{ArtifactReport, OperatorCommand};
use crate::sim::RobotState;

/// One line of the mission log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryEvent {
    pub seq: u64,
    pub at: Seconds,
    pub wall: String,
    #[serde(flatten)]
    pub body: EventBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "kebab-case")]
pub enum EventBody {
    Mission(MissionEvent),
    TaskStatus(TaskStatusChange),
    Gate(GateEvent),
    Plan(PlanEvent),
    Relaxation(RelaxationReport),
    RobotHealth(RobotState),
    CourseEntry(CourseEntry),
    Artifact(ArtifactEvent),
    CursorSample(CursorSample),
    ViewSwitch(ViewSwitch),
    OperatorCommand(OperatorCommand),
    Alert(Alert),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Mission,
    TaskStatus,
    Gate,
    Plan,
    Relaxation,
    RobotHealth,
    CourseEntry,
    Artifact,
    CursorSample,
    ViewSwitch,
    OperatorCommand,
    Alert,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Mission => "mission",
            EventKind::TaskStatus => "task-status",
            EventKind::Gate => "gate",
            EventKind::Plan => "plan",
            EventKind::Relaxation => "relaxation",
            EventKind::RobotHealth => "robot-health",
            EventKind::CourseEntry => "course-entry",
            EventKind::Artifact => "artifact",
            EventKind::CursorSample => "cursor-sample",
            EventKind::ViewSwitch => "view-switch",
            EventKind::OperatorCommand => "operator-command",
            EventKind::Alert => "alert",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl EventBody {
    pub fn kind(&self) -> EventKind {
        match self {
            EventBody::Mission(_) => EventKind::Mission,
            EventBody::TaskStatus(_) => EventKind::TaskStatus,
            EventBody::Gate(_) => EventKind::Gate,
            EventBody::Plan(_) => EventKind::Plan,
            EventBody::Relaxation(_) => EventKind::Relaxation,
            EventBody::RobotHealth(_) => EventKind::RobotHealth,
            EventBody::CourseEntry(_) => EventKind::CourseEntry,
            EventBody::Artifact(_) => EventKind::Artifact,
            EventBody::CursorSample(_) => EventKind::CursorSample,
            EventBody::ViewSwitch(_) => EventKind::ViewSwitch,
            EventBody::OperatorCommand(_) => EventKind::OperatorCommand,
            EventBody::Alert(_) => EventKind::Alert,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissionPhase {
    #[default]
    SetupPending,
    Setup,
    Exploration,
    Ended,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum MissionEvent {
    Configured {
        fleet: Vec<RobotId>,
        phases: PhaseWindows,
        limits: ResourceLimits,
        submission_budget: u32,
    },
    Started,
    TasksGenerated {
        graph: TaskGraph,
    },
    PhaseChanged {
        phase: MissionPhase,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskStatusChange {
    pub task: InstanceId,
    pub status: TaskStatus,
    pub phase: ExecPhase,
    pub attempts: u32,
    pub timeout: Seconds,
    pub deadline_extension: Seconds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub started_at: Option<Seconds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<TaskError>,
}

impl TaskStatusChange {
    pub fn from_runtime(rt: &TaskRuntime) -> Self {
        Self {
            task: rt.instance_id.clone(),
            status: rt.status,
            phase: rt.phase,
            attempts: rt.attempts,
            timeout: rt.timeout,
            deadline_extension: rt.deadline_extension,
            started_at: rt.started_at,
            error: rt.last_error.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum GateEvent {
    Opened(GateRequest),
    Resolved { request: String, task: InstanceId, decision: GateDecision },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum PlanEvent {
    Updated { plan_id: u64, trigger: Trigger, schedule: Schedule },
    Unchanged { plan_id: u64, trigger: Trigger, planned_at: Seconds },
    Failed { trigger: Trigger, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CourseEntry {
    pub robot: RobotId,
    /// Mission clock when the robot crossed into the course.
    pub at: Seconds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum ArtifactEvent {
    Reported { report: ArtifactReport },
    Updated { report: ArtifactReport },
}

/// Cursor position in screen pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CursorSample {
    pub t: Seconds,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewSwitch {
    pub t: Seconds,
    pub view: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlertLevel {
    Info,
    Warning,
    Critical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alert {
    pub level: AlertLevel,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<InstanceId>,
    pub message: String,
}
