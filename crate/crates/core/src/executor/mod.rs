//! Verified task execution.
//!
//! Every task runs the same template: precondition check, bounded
//! execution, postcondition check. Human gates sit either before execution
//! (`pre_*`, `gonogo`) or after the postcondition (`signoff_*`). Execution
//! and postcondition failures are retried automatically with a growing
//! timeout; once retries are exhausted the task fails and the operator is
//! alerted. The operator may retry further or reset tasks at any time.
//!
//! The executor never touches the mission store directly. State changes are
//! queued as events in an outbox that the owner drains and appends.

mod runtime;
mod scripted;

pub use runtime::{ExecPhase, GateDecision, GateRequest, RetryPolicy, TaskError, TaskRuntime};
pub use scripted::{Behaviour, ScriptedActions};

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{Gate, InstanceId, Seconds, Task, TaskGraph, TaskStatus};
use crate::planner::{Schedule, Trigger};
use crate::store::{Alert, AlertLevel, EventBody, GateEvent, TaskStatusChange};

const EPS: f64 = 1e-9;

/// Result of polling a running action.
#[derive(Debug, Clone, PartialEq)]
pub enum ExecStatus {
    Running,
    Finished,
    Failed(String),
}

/// Per-task action bindings: the extension point for robot adapters.
pub trait TaskActions {
    fn precondition(&mut self, task: &Task, now: Seconds) -> Result<(), String>;
    /// Begin (or restart) the execution phase.
    fn start(&mut self, task: &Task, attempt: u32, now: Seconds);
    fn poll(&mut self, task: &Task, now: Seconds) -> ExecStatus;
    fn postcondition(&mut self, task: &Task, now: Seconds) -> Result<(), String>;
    /// Stop a running action after a timeout or reset.
    fn abort(&mut self, _task: &Task, _now: Seconds) {}
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecError {
    #[error("unknown task `{0}`")]
    UnknownTask(InstanceId),
    #[error("unknown gate request `{0}`")]
    UnknownRequest(String),
    #[error("gate request `{0}` is already resolved")]
    ClosedRequest(String),
    #[error("task `{task}` is {status}, only failed tasks can be retried")]
    NotFailed { task: InstanceId, status: TaskStatus },
    #[error("decision {decision:?} is not valid for a {kind:?} gate")]
    InvalidDecision { kind: Gate, decision: GateDecision },
}

/// Terminal or blocking state reached by [`Executor::run_task`].
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Succeeded,
    Failed(TaskError),
    AwaitingGate(String),
}

#[derive(Debug, Clone)]
struct GateSlot {
    request: GateRequest,
    open: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Executor {
    policy: RetryPolicy,
    runtimes: BTreeMap<InstanceId, TaskRuntime>,
    gates: BTreeMap<String, GateSlot>,
    gate_seq: u64,
    late_flags: BTreeSet<(InstanceId, u64)>,
    outbox: Vec<EventBody>,
    replan: Option<Trigger>,
}

impl Executor {
    pub fn new(policy: RetryPolicy) -> Self {
        Self { policy, ..Self::default() }
    }

    pub fn policy(&self) -> &RetryPolicy {
        &self.policy
    }

    /// Track every task in `graph`, keeping runtimes of tasks already known.
    pub fn sync_graph(&mut self, graph: &TaskGraph) {
        for t in graph.tasks.values() {
            self.runtimes
                .entry(t.instance_id.clone())
                .or_insert_with(|| TaskRuntime::new(t.instance_id.clone(), t.def.duration));
        }
        self.runtimes.retain(|id, _| graph.tasks.contains_key(id));
    }

    pub fn runtime(&self, id: &InstanceId) -> Option<&TaskRuntime> {
        self.runtimes.get(id)
    }

    pub fn runtimes(&self) -> impl Iterator<Item = &TaskRuntime> {
        self.runtimes.values()
    }

    pub fn status(&self, id: &InstanceId) -> Option<TaskStatus> {
        self.runtimes.get(id).map(|r| r.status)
    }

    pub fn open_gates(&self) -> impl Iterator<Item = &GateRequest> {
        self.gates.values().filter(|g| g.open).map(|g| &g.request)
    }

    pub fn gate(&self, id: &str) -> Option<(&GateRequest, bool)> {
        self.gates.get(id).map(|g| (&g.request, g.open))
    }

    /// Open gate on `task`, if any.
    pub fn gate_for(&self, task: &InstanceId) -> Option<&GateRequest> {
        self.runtimes.get(task)?.open_gate.as_ref().map(|g| &self.gates[g].request)
    }

    /// Events produced since the last drain, in order.
    pub fn drain_events(&mut self) -> Vec<EventBody> {
        std::mem::take(&mut self.outbox)
    }

    /// Replanning request raised by a state change (no-go, reset, retry).
    pub fn take_replan(&mut self) -> Option<Trigger> {
        self.replan.take()
    }

    fn emit_status(&mut self, id: &InstanceId) {
        let rt = &self.runtimes[id];
        self.outbox.push(EventBody::TaskStatus(TaskStatusChange::from_runtime(rt)));
    }

    fn alert(&mut self, level: AlertLevel, task: Option<&InstanceId>, message: String) {
        self.outbox.push(EventBody::Alert(Alert {
            level,
            source: "executor".into(),
            task: task.cloned(),
            message,
        }));
    }

    fn deps_succeeded(&self, graph: &TaskGraph, id: &InstanceId) -> bool {
        graph
            .predecessors(id)
            .iter()
            .all(|p| self.status(p) == Some(TaskStatus::Succeeded))
    }

    /// Start every pending task whose scheduled start has come and whose
    /// dependencies all succeeded.
    pub fn dispatch_ready(
        &mut self,
        graph: &TaskGraph,
        schedule: &Schedule,
        now: Seconds,
        actions: &mut dyn TaskActions,
    ) -> BTreeSet<InstanceId> {
        let mut due: Vec<(&InstanceId, Seconds)> = schedule
            .entries
            .iter()
            .filter(|(_, e)| e.start <= now + EPS)
            .map(|(id, e)| (id, e.start))
            .collect();
        due.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));
        let mut started = BTreeSet::new();
        for (id, _) in due {
            if self.status(id) != Some(TaskStatus::Pending) || !self.deps_succeeded(graph, id) {
                continue;
            }
            let Some(task) = graph.task(id) else { continue };
            let rt = self.runtimes.get_mut(id).expect("synced runtime");
            rt.status = TaskStatus::Active;
            rt.phase = ExecPhase::CheckingPre;
            rt.started_at = Some(now);
            self.emit_status(id);
            self.check_pre(task, actions, now);
            started.insert(id.clone());
        }
        started
    }

    fn check_pre(&mut self, task: &Task, actions: &mut dyn TaskActions, now: Seconds) {
        let id = &task.instance_id;
        if let Err(reason) = actions.precondition(task, now) {
            self.finish_failed(task, TaskError::PreconditionFailed { reason }, now);
            return;
        }
        let rt = &self.runtimes[id];
        if task.def.gate.is_pre() && !rt.pre_gate_cleared {
            self.open_gate(task, now);
        } else {
            self.begin_execution(task, actions, now);
        }
    }

    fn open_gate(&mut self, task: &Task, now: Seconds) {
        self.gate_seq += 1;
        let gid = format!("gate-{}", self.gate_seq);
        let request = GateRequest::new(gid.clone(), task, now);
        self.gates.insert(gid.clone(), GateSlot { request: request.clone(), open: true });
        let rt = self.runtimes.get_mut(&task.instance_id).expect("synced runtime");
        rt.status = TaskStatus::AwaitingGate;
        rt.phase = ExecPhase::AwaitingGate;
        rt.open_gate = Some(gid);
        self.emit_status(&task.instance_id);
        self.outbox.push(EventBody::Gate(GateEvent::Opened(request)));
    }

    fn begin_execution(&mut self, task: &Task, actions: &mut dyn TaskActions, now: Seconds) {
        let policy = self.policy;
        let rt = self.runtimes.get_mut(&task.instance_id).expect("synced runtime");
        rt.attempts += 1;
        rt.timeout = policy.timeout_for(rt.nominal, rt.attempts);
        rt.status = TaskStatus::Active;
        rt.phase = ExecPhase::Executing;
        rt.attempt_started_at = Some(now);
        let started = rt.started_at.unwrap_or(now);
        rt.deadline_extension = (now - started) + rt.timeout - rt.nominal;
        let attempt = rt.attempts;
        self.emit_status(&task.instance_id);
        actions.start(task, attempt, now);
    }

    fn check_post(&mut self, task: &Task, actions: &mut dyn TaskActions, now: Seconds) {
        let rt = self.runtimes.get_mut(&task.instance_id).expect("synced runtime");
        rt.phase = ExecPhase::CheckingPost;
        self.emit_status(&task.instance_id);
        if let Err(reason) = actions.postcondition(task, now) {
            self.attempt_failed(task, TaskError::PostconditionFailed { reason }, actions, now);
            return;
        }
        if task.def.gate.is_signoff() {
            self.open_gate(task, now);
        } else {
            self.finish_succeeded(&task.instance_id);
        }
    }

    fn finish_succeeded(&mut self, id: &InstanceId) {
        let rt = self.runtimes.get_mut(id).expect("synced runtime");
        rt.status = TaskStatus::Succeeded;
        rt.phase = ExecPhase::Done;
        rt.open_gate = None;
        self.emit_status(id);
    }

    fn finish_failed(&mut self, task: &Task, error: TaskError, _now: Seconds) {
        let id = &task.instance_id;
        let rt = self.runtimes.get_mut(id).expect("synced runtime");
        rt.status = TaskStatus::Failed;
        rt.phase = ExecPhase::Done;
        rt.open_gate = None;
        rt.last_error = Some(error.clone());
        let attempts = rt.attempts;
        self.emit_status(id);
        let level = if error == TaskError::NoGo { AlertLevel::Warning } else { AlertLevel::Critical };
        self.alert(level, Some(id), format!("task {id} failed after {attempts} attempt(s): {error}"));
    }

    /// Execution or postcondition failure: retry automatically while attempts remain.
    fn attempt_failed(&mut self, task: &Task, error: TaskError, actions: &mut dyn TaskActions, now: Seconds) {
        let limit = self.policy.max_attempts();
        let rt = self.runtimes.get_mut(&task.instance_id).expect("synced runtime");
        rt.last_error = Some(error.clone());
        if rt.attempts < limit {
            rt.phase = ExecPhase::CheckingPre;
            self.emit_status(&task.instance_id);
            self.check_pre(task, actions, now);
        } else {
            self.finish_failed(task, error, now);
        }
    }

    /// Progress running tasks: poll executions, enforce timeouts, check postconditions.
    pub fn advance(&mut self, graph: &TaskGraph, actions: &mut dyn TaskActions, now: Seconds) {
        let executing: Vec<InstanceId> = self
            .runtimes
            .values()
            .filter(|r| r.phase == ExecPhase::Executing)
            .map(|r| r.instance_id.clone())
            .collect();
        for id in executing {
            let Some(task) = graph.task(&id) else { continue };
            match actions.poll(task, now) {
                ExecStatus::Finished => self.check_post(task, actions, now),
                ExecStatus::Failed(reason) => {
                    self.attempt_failed(task, TaskError::ExecutionFailed { reason }, actions, now)
                }
                ExecStatus::Running => {
                    let rt = &self.runtimes[&id];
                    let started = rt.attempt_started_at.unwrap_or(now);
                    if now - started > rt.timeout + EPS {
                        let timeout = rt.timeout;
                        actions.abort(task, now);
                        self.attempt_failed(task, TaskError::ExecutionTimeout { timeout }, actions, now);
                    }
                }
            }
        }
    }

    /// Apply an operator decision to an open gate.
    pub fn resolve_gate(
        &mut self,
        graph: &TaskGraph,
        request: &str,
        decision: GateDecision,
        actions: &mut dyn TaskActions,
        now: Seconds,
    ) -> Result<TaskStatus, ExecError> {
        let slot = self.gates.get(request).ok_or_else(|| ExecError::UnknownRequest(request.to_string()))?;
        if !slot.open {
            return Err(ExecError::ClosedRequest(request.to_string()));
        }
        let kind = slot.request.kind;
        if kind == Gate::Gonogo && decision == GateDecision::Confirm {
            return Err(ExecError::InvalidDecision { kind, decision });
        }
        let task_id = slot.request.instance_id.clone();
        let task = graph.task(&task_id).ok_or_else(|| ExecError::UnknownTask(task_id.clone()))?;
        self.gates.get_mut(request).expect("checked").open = false;
        self.outbox.push(EventBody::Gate(GateEvent::Resolved {
            request: request.to_string(),
            task: task_id.clone(),
            decision,
        }));
        let rt = self.runtimes.get_mut(&task_id).expect("synced runtime");
        rt.open_gate = None;
        match decision {
            GateDecision::NoGo => {
                self.finish_failed(task, TaskError::NoGo, now);
                self.replan = Some(Trigger::StrategyChange);
            }
            GateDecision::Go | GateDecision::Confirm => {
                if kind.is_pre() {
                    rt.pre_gate_cleared = true;
                    self.begin_execution(task, actions, now);
                } else {
                    self.finish_succeeded(&task_id);
                }
            }
        }
        Ok(self.runtimes[&task_id].status)
    }

    /// Operator-initiated retry of a failed task, allowed beyond the automatic limit.
    pub fn retry_task(
        &mut self,
        graph: &TaskGraph,
        id: &InstanceId,
        actions: &mut dyn TaskActions,
        now: Seconds,
    ) -> Result<TaskRuntime, ExecError> {
        let task = graph.task(id).ok_or_else(|| ExecError::UnknownTask(id.clone()))?;
        let policy = self.policy;
        let rt = self.runtimes.get_mut(id).ok_or_else(|| ExecError::UnknownTask(id.clone()))?;
        if rt.status != TaskStatus::Failed {
            return Err(ExecError::NotFailed { task: id.clone(), status: rt.status });
        }
        if rt.last_error == Some(TaskError::NoGo) {
            rt.pre_gate_cleared = false;
        }
        rt.operator_retries += 1;
        rt.status = TaskStatus::Active;
        rt.phase = ExecPhase::CheckingPre;
        rt.started_at = Some(now);
        rt.timeout = policy.timeout_for(rt.nominal, rt.attempts + 1);
        let snapshot = rt.clone();
        self.emit_status(id);
        self.replan = Some(Trigger::StrategyChange);
        self.check_pre(task, actions, now);
        Ok(snapshot)
    }

    /// Return a task (and with `cascade`, every started or finished
    /// transitive successor) to pending.
    pub fn reset_task(
        &mut self,
        graph: &TaskGraph,
        id: &InstanceId,
        cascade: bool,
        actions: &mut dyn TaskActions,
        now: Seconds,
    ) -> Result<BTreeSet<InstanceId>, ExecError> {
        let status = self.status(id).ok_or_else(|| ExecError::UnknownTask(id.clone()))?;
        let mut affected = BTreeSet::from([id.clone()]);
        if status == TaskStatus::Pending && !cascade {
            return Ok(affected);
        }
        let successors = graph.transitive_successors(id);
        if cascade {
            affected.extend(
                successors
                    .iter()
                    .filter(|s| self.status(s).is_some_and(|st| st != TaskStatus::Pending))
                    .cloned(),
            );
        } else {
            let inverted: Vec<&InstanceId> = successors
                .iter()
                .filter(|s| {
                    self.status(s)
                        .is_some_and(|st| st == TaskStatus::Succeeded || st.is_running())
                })
                .collect();
            if !inverted.is_empty() {
                let names: Vec<&str> = inverted.iter().map(|s| s.as_str()).collect();
                self.alert(
                    AlertLevel::Warning,
                    Some(id),
                    format!("dependency inversion: {id} reset while successors {} remain started", names.join(", ")),
                );
            }
        }
        for target in &affected {
            let Some(task) = graph.task(target) else { continue };
            let rt = self.runtimes.get_mut(target).expect("synced runtime");
            if rt.status == TaskStatus::Pending {
                continue;
            }
            if rt.phase == ExecPhase::Executing {
                actions.abort(task, now);
            }
            if let Some(g) = rt.open_gate.take() {
                if let Some(slot) = self.gates.get_mut(&g) {
                    slot.open = false;
                }
            }
            let rt = self.runtimes.get_mut(target).expect("synced runtime");
            *rt = TaskRuntime::new(target.clone(), rt.nominal);
            self.emit_status(target);
        }
        self.replan = Some(Trigger::StrategyChange);
        Ok(affected)
    }

    /// Late-task triggers for running tasks past their scheduled end; each
    /// `(task, plan)` pair fires once.
    pub fn check_lateness(&mut self, schedule: &Schedule, plan_id: u64, now: Seconds) -> Vec<InstanceId> {
        let mut late = Vec::new();
        for rt in self.runtimes.values() {
            if !rt.status.is_running() {
                continue;
            }
            let Some(entry) = schedule.entry(&rt.instance_id) else { continue };
            if now > entry.end + EPS && self.late_flags.insert((rt.instance_id.clone(), plan_id)) {
                late.push(rt.instance_id.clone());
            }
        }
        late
    }

    /// Drive one task through its lifecycle with a fixed clock step.
    ///
    /// Dispatches the task if still pending and stops at a terminal state or
    /// an open gate. Returns the outcome and the clock when it was reached.
    pub fn run_task(
        &mut self,
        graph: &TaskGraph,
        id: &InstanceId,
        actions: &mut dyn TaskActions,
        start: Seconds,
        step: Seconds,
        horizon: Seconds,
    ) -> Result<(Outcome, Seconds), ExecError> {
        let task = graph.task(id).ok_or_else(|| ExecError::UnknownTask(id.clone()))?;
        let mut now = start;
        if self.status(id) == Some(TaskStatus::Pending) {
            let rt = self.runtimes.get_mut(id).ok_or_else(|| ExecError::UnknownTask(id.clone()))?;
            rt.status = TaskStatus::Active;
            rt.phase = ExecPhase::CheckingPre;
            rt.started_at = Some(now);
            self.emit_status(id);
            self.check_pre(task, actions, now);
        }
        loop {
            let rt = &self.runtimes[id];
            match (rt.status, rt.phase) {
                (TaskStatus::Succeeded, _) => return Ok((Outcome::Succeeded, now)),
                (TaskStatus::Failed, _) => {
                    let err = rt.last_error.clone().expect("failed task records its error");
                    return Ok((Outcome::Failed(err), now));
                }
                (_, ExecPhase::AwaitingGate) => {
                    return Ok((Outcome::AwaitingGate(rt.open_gate.clone().unwrap_or_default()), now))
                }
                _ => {}
            }
            if now - start > horizon {
                let timeout = rt.timeout;
                return Ok((Outcome::Failed(TaskError::ExecutionTimeout { timeout }), now));
            }
            now += step;
            self.advance(graph, actions, now);
        }
    }
}
