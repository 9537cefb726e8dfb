use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{Gate, InstanceId, RobotId, Seconds, Task, TaskStatus};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    /// Automatic retries after the first attempt.
    pub retry_limit: u32,
    pub extension_factor: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { retry_limit: 3, extension_factor: 1.5 }
    }
}

impl RetryPolicy {
    pub fn max_attempts(&self) -> u32 {
        self.retry_limit + 1
    }

    /// Execution timeout for the given (1-based) attempt.
    pub fn timeout_for(&self, nominal: Seconds, attempt: u32) -> Seconds {
        nominal * self.extension_factor.powi(attempt.saturating_sub(1) as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecPhase {
    #[default]
    Idle,
    CheckingPre,
    AwaitingGate,
    Executing,
    CheckingPost,
    Done,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "error", rename_all = "kebab-case")]
pub enum TaskError {
    PreconditionFailed { reason: String },
    ExecutionTimeout { timeout: Seconds },
    ExecutionFailed { reason: String },
    PostconditionFailed { reason: String },
    NoGo,
}

impl fmt::Display for TaskError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskError::PreconditionFailed { reason } => write!(f, "precondition failed: {reason}"),
            TaskError::ExecutionTimeout { timeout } => write!(f, "execution exceeded {timeout}s timeout"),
            TaskError::ExecutionFailed { reason } => write!(f, "execution failed: {reason}"),
            TaskError::PostconditionFailed { reason } => write!(f, "postcondition failed: {reason}"),
            TaskError::NoGo => write!(f, "no-go decision"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRuntime {
    pub instance_id: InstanceId,
    pub status: TaskStatus,
    pub phase: ExecPhase,
    pub attempts: u32,
    pub timeout: Seconds,
    pub last_error: Option<TaskError>,
    pub nominal: Seconds,
    pub started_at: Option<Seconds>,
    pub attempt_started_at: Option<Seconds>,
    pub deadline_extension: Seconds,
    pub pre_gate_cleared: bool,
    pub open_gate: Option<String>,
    pub operator_retries: u32,
}

impl TaskRuntime {
    pub fn new(instance_id: InstanceId, nominal: Seconds) -> Self {
        Self {
            instance_id,
            status: TaskStatus::Pending,
            phase: ExecPhase::Idle,
            attempts: 0,
            timeout: nominal,
            last_error: None,
            nominal,
            started_at: None,
            attempt_started_at: None,
            deadline_extension: 0.0,
            pre_gate_cleared: false,
            open_gate: None,
            operator_retries: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateDecision {
    Go,
    NoGo,
    Confirm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateRequest {
    pub id: String,
    pub instance_id: InstanceId,
    pub kind: Gate,
    pub prompt: String,
    pub issued_at: Seconds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robot: Option<RobotId>,
}

impl GateRequest {
    pub fn new(id: String, task: &Task, issued_at: Seconds) -> Self {
        let subject = match &task.robot {
            Some(r) => format!("{} on {r}", task.def.label),
            None => task.def.label.clone(),
        };
        let prompt = match task.def.gate {
            Gate::PreOperator => format!("Start {subject}?"),
            Gate::PrePitcrew => format!("Pit crew: perform {subject}"),
            Gate::SignoffOperator => format!("Sign off {subject}"),
            Gate::SignoffPitcrew => format!("Pit crew: confirm {subject}"),
            Gate::Gonogo => format!("Go / no-go: {subject}"),
            Gate::None => subject,
        };
        Self { id, instance_id: task.instance_id.clone(), kind: task.def.gate, prompt, issued_at, robot: task.robot.clone() }
    }
}
