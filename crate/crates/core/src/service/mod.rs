//! Mission control: the single writer that ties the store, planner,
//! executor and fleet together, and the command surface the operator
//! console talks to.
//!
//! Every operator command is appended to the log before it is applied. A
//! rejected command stays in the log followed by an info alert naming the
//! reason.

mod artifacts;
mod command;
mod operator;
mod runner;

pub use artifacts::{ArtifactReport, ArtifactStatus, ReviewAction};
pub use command::OperatorCommand;
pub use operator::{AutoOperator, OperatorAction, ScreenLayout, VIEWS};
pub use runner::{drive_operator, load_template, run_scenario, run_scenario_with, RunSummary};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::executor::{ExecError, Executor, GateDecision, RetryPolicy};
use crate::model::{
    generate_tasks, Gate, GenerateError, InstanceId, MissionTemplate, RobotId, Seconds, TaskGraph, TaskStatus,
};
use crate::planner::{PlanCycle, PlannerSettings, Trigger};
use crate::sim::{Detection, Fleet, RobotCommand, Scenario, SimError, SimEvent};
use crate::store::{
    Alert, AlertLevel, ArtifactEvent, CursorSample, EventBody, MissionEvent, MissionPhase, MissionSnapshot, Store,
    StoreError, TelemetryEvent, ViewSwitch,
};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("{command} is not allowed while the mission is {phase:?}")]
    IllegalPhase { command: &'static str, phase: MissionPhase },
    #[error("unknown target `{0}`")]
    UnknownTarget(String),
    #[error("submission budget exhausted")]
    BudgetExhausted,
    #[error("{0}")]
    Rejected(String),
    #[error("telemetry rejected: {0}")]
    Telemetry(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl From<ExecError> for ServiceError {
    fn from(e: ExecError) -> Self {
        match e {
            ExecError::UnknownTask(id) => ServiceError::UnknownTarget(id.to_string()),
            ExecError::UnknownRequest(id) => ServiceError::UnknownTarget(id),
            other => ServiceError::Rejected(other.to_string()),
        }
    }
}

impl From<SimError> for ServiceError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::UnknownRobot(r) => ServiceError::UnknownTarget(r.to_string()),
            SimError::UnknownNode(n) => ServiceError::UnknownTarget(format!("node {n}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandAck {
    /// Seq of the logged command.
    pub seq: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TelemetryBatch {
    #[serde(default)]
    pub samples: Vec<CursorSample>,
    #[serde(default)]
    pub views: Vec<ViewSwitch>,
}

/// Snapshot plus the cursor for resuming the event stream.
#[derive(Debug, Clone, Serialize)]
pub struct StateView<'a> {
    pub next_seq: u64,
    #[serde(flatten)]
    pub snapshot: &'a MissionSnapshot,
}

pub struct MissionControl {
    template: MissionTemplate,
    fleet_ids: Vec<RobotId>,
    flag_threshold: f64,
    store: Store,
    executor: Executor,
    planner: PlanCycle,
    fleet: Fleet,
    graph: TaskGraph,
    now: Seconds,
    end: Seconds,
    selected: bool,
}

impl MissionControl {
    pub fn new(
        template: MissionTemplate,
        scenario: &Scenario,
        robots: Vec<RobotId>,
        mut store: Store,
    ) -> Result<Self, ServiceError> {
        let mut seen = BTreeSet::new();
        if let Some(dup) = robots.iter().find(|r| !seen.insert(*r)) {
            return Err(ServiceError::Rejected(format!("robot `{dup}` listed twice")));
        }
        let fleet = Fleet::new(scenario, &robots)?;
        store.append(
            0.0,
            EventBody::Mission(MissionEvent::Configured {
                fleet: robots.clone(),
                phases: template.phases,
                limits: template.resources,
                submission_budget: scenario.submission_budget,
            }),
        )?;
        let end = scenario.duration.unwrap_or(template.phases.exploration_window[1]);
        Ok(Self {
            fleet_ids: robots,
            flag_threshold: scenario.operator.flag_threshold,
            store,
            executor: Executor::new(RetryPolicy::default()),
            planner: PlanCycle::new(PlannerSettings::default()),
            fleet,
            graph: TaskGraph::default(),
            now: 0.0,
            end,
            selected: false,
            template,
        })
    }

    pub fn with_policies(mut self, retry: RetryPolicy, planner: PlannerSettings) -> Self {
        self.executor = Executor::new(retry);
        self.planner = PlanCycle::new(planner);
        self
    }

    pub fn now(&self) -> Seconds {
        self.now
    }

    pub fn end(&self) -> Seconds {
        self.end
    }

    pub fn is_finished(&self) -> bool {
        self.store.snapshot().phase == MissionPhase::Ended
    }

    pub fn snapshot(&self) -> &MissionSnapshot {
        self.store.snapshot()
    }

    pub fn state(&self) -> StateView<'_> {
        StateView { next_seq: self.store.len(), snapshot: self.store.snapshot() }
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn into_store(self) -> Store {
        self.store
    }

    pub fn executor(&self) -> &Executor {
        &self.executor
    }

    pub fn fleet(&self) -> &Fleet {
        &self.fleet
    }

    pub fn fleet_mut(&mut self) -> &mut Fleet {
        &mut self.fleet
    }

    pub fn template(&self) -> &MissionTemplate {
        &self.template
    }

    pub fn events_from(&self, from: u64) -> Result<&[TelemetryEvent], ServiceError> {
        Ok(self.store.events_from(from)?)
    }

    fn phase(&self) -> MissionPhase {
        self.store.snapshot().phase
    }

    fn flush_executor(&mut self) -> Result<(), ServiceError> {
        for e in self.executor.drain_events() {
            self.store.append(self.now, e)?;
        }
        if let Some(t) = self.executor.take_replan() {
            self.planner.request(t);
        }
        self.flush_fleet(Vec::new())
    }

    fn flush_fleet(&mut self, mut events: Vec<SimEvent>) -> Result<(), ServiceError> {
        events.extend(self.fleet.drain());
        for e in events {
            let body = match e {
                SimEvent::Health(state) => EventBody::RobotHealth(state),
                SimEvent::CourseEntry(entry) => EventBody::CourseEntry(entry),
                SimEvent::Detection(d) => EventBody::Artifact(ArtifactEvent::Reported {
                    report: ArtifactReport::from_detection(&d, self.flag_threshold),
                }),
            };
            self.store.append(self.now, body)?;
        }
        Ok(())
    }

    fn install_graph(&mut self, graph: TaskGraph) -> Result<(), ServiceError> {
        self.executor.sync_graph(&graph);
        self.graph = graph.clone();
        self.store.append(self.now, EventBody::Mission(MissionEvent::TasksGenerated { graph }))?;
        Ok(())
    }

    /// Advance the mission clock by `dt` and run one control step.
    pub fn tick(&mut self, dt: Seconds) -> Result<(), ServiceError> {
        if self.is_finished() {
            return Ok(());
        }
        self.now += dt;
        let delivered = self.fleet.step(dt);
        self.flush_fleet(delivered)?;
        let phases = self.template.phases;
        if self.phase() == MissionPhase::Setup && self.now + 1e-9 >= phases.exploration_start() {
            self.store.append(
                phases.exploration_start(),
                EventBody::Mission(MissionEvent::PhaseChanged { phase: MissionPhase::Exploration }),
            )?;
        }
        if self.phase() == MissionPhase::SetupPending {
            return Ok(());
        }
        self.executor.advance(&self.graph, &mut self.fleet, self.now);
        self.flush_executor()?;
        if let Some(schedule) = self.store.snapshot().schedule.clone() {
            self.executor.dispatch_ready(&self.graph, &schedule, self.now, &mut self.fleet);
            self.flush_executor()?;
            let plan_id = self.store.snapshot().plan_id;
            if !self.executor.check_lateness(&schedule, plan_id, self.now).is_empty() {
                self.planner.request(Trigger::LateTask);
            }
        }
        self.planner.poll(&mut self.store, self.now)?;
        if self.now + 1e-9 >= self.end {
            self.store
                .append(self.now, EventBody::Mission(MissionEvent::PhaseChanged { phase: MissionPhase::Ended }))?;
        }
        Ok(())
    }

    /// Run any replan queued by a command without waiting for the next tick.
    pub fn replan_now(&mut self) -> Result<(), ServiceError> {
        if self.planner.pending().is_some() {
            self.planner.poll(&mut self.store, self.now)?;
        }
        Ok(())
    }

    pub fn start(&mut self) -> Result<CommandAck, ServiceError> {
        self.apply_command(OperatorCommand::StartMission)
    }

    /// Log `cmd`, then apply it.
    pub fn apply_command(&mut self, cmd: OperatorCommand) -> Result<CommandAck, ServiceError> {
        let seq = self.store.append(self.now, EventBody::OperatorCommand(cmd.clone()))?;
        match self.route(&cmd) {
            Ok(detail) => {
                self.flush_executor()?;
                Ok(CommandAck { seq, detail })
            }
            Err(e) => {
                self.flush_executor()?;
                if !matches!(e, ServiceError::Store(_)) {
                    self.store.append(
                        self.now,
                        EventBody::Alert(Alert {
                            level: AlertLevel::Info,
                            source: "control".into(),
                            task: None,
                            message: format!("{} rejected: {e}", cmd.name()),
                        }),
                    )?;
                }
                Err(e)
            }
        }
    }

    fn require_active(&self, command: &'static str) -> Result<(), ServiceError> {
        match self.phase() {
            MissionPhase::Setup | MissionPhase::Exploration => Ok(()),
            phase => Err(ServiceError::IllegalPhase { command, phase }),
        }
    }

    fn selection_gate_open(&self) -> bool {
        let Some(sel) = &self.template.robot_selection_task else { return false };
        let id = InstanceId::base(sel);
        self.executor.gate_for(&id).is_some_and(|g| g.kind.is_pre())
    }

    fn route(&mut self, cmd: &OperatorCommand) -> Result<Option<String>, ServiceError> {
        let name = cmd.name();
        match cmd {
            OperatorCommand::StartMission => {
                if self.phase() != MissionPhase::SetupPending {
                    return Err(ServiceError::IllegalPhase { command: name, phase: self.phase() });
                }
                self.store.append(self.now, EventBody::Mission(MissionEvent::Started))?;
                let graph = if self.template.robot_selection_task.is_some() {
                    generate_tasks(&self.template, &[])
                } else {
                    self.selected = true;
                    generate_tasks(&self.template, &self.fleet_ids)
                }
                .map_err(|e| ServiceError::Rejected(e.to_string()))?;
                self.install_graph(graph)?;
                self.planner.plan_cycle(&mut self.store, Trigger::StrategyChange, self.now)?;
                if let Some(schedule) = self.store.snapshot().schedule.clone() {
                    self.executor.dispatch_ready(&self.graph, &schedule, self.now, &mut self.fleet);
                }
                Ok(None)
            }
            OperatorCommand::SelectRobots { robots } => {
                self.require_active(name)?;
                if self.selected || !self.selection_gate_open() {
                    return Err(ServiceError::Rejected(
                        "robots can only be selected while the base software launch gate is open".into(),
                    ));
                }
                if let Some(r) = robots.iter().find(|r| !self.fleet_ids.contains(r)) {
                    return Err(ServiceError::UnknownTarget(r.to_string()));
                }
                let graph = generate_tasks(&self.template, robots).map_err(|e| match e {
                    GenerateError::DuplicateRobot(r) | GenerateError::ReservedRobot(r) => {
                        ServiceError::Rejected(format!("invalid robot selection `{r}`"))
                    }
                })?;
                self.selected = true;
                self.install_graph(graph)?;
                self.planner.request(Trigger::StrategyChange);
                Ok(Some(format!("{} robot(s) selected", robots.len())))
            }
            OperatorCommand::GateDecision { request, decision } => {
                self.require_active(name)?;
                let gate = self.executor.gate(request).map(|(g, _)| g.clone());
                if let Some(g) = &gate {
                    let is_selection =
                        self.template.robot_selection_task.as_deref().map(InstanceId::base) == Some(g.instance_id.clone());
                    if is_selection && !self.selected && *decision != GateDecision::NoGo {
                        return Err(ServiceError::Rejected("select the robots to deploy before confirming".into()));
                    }
                }
                let status = self.executor.resolve_gate(&self.graph, request, *decision, &mut self.fleet, self.now)?;
                if status == TaskStatus::Active && gate.is_some_and(|g| g.kind == Gate::Gonogo) {
                    return Ok(Some("deployment started".into()));
                }
                Ok(None)
            }
            OperatorCommand::Retry { task } => {
                self.require_active(name)?;
                self.executor.retry_task(&self.graph, task, &mut self.fleet, self.now)?;
                Ok(None)
            }
            OperatorCommand::Reset { task, cascade } => {
                self.require_active(name)?;
                let affected = self.executor.reset_task(&self.graph, task, *cascade, &mut self.fleet, self.now)?;
                Ok(Some(format!("{} task(s) reset", affected.len())))
            }
            OperatorCommand::Waypoint { robot, node } | OperatorCommand::CommsNodeDrop { robot, node } => {
                self.require_active(name)?;
                let command = match cmd {
                    OperatorCommand::Waypoint { .. } => RobotCommand::Waypoint { node: *node },
                    _ => RobotCommand::CommsNodeDrop { node: *node },
                };
                let queued = self.fleet.send_command(robot, command)?;
                Ok(queued.then(|| format!("{robot} is out of comms, command queued")))
            }
            OperatorCommand::ArtifactReview { artifact, action } => {
                self.require_active(name)?;
                self.review(artifact, *action).map(|r| Some(format!("{:?}", r.status).to_lowercase()))
            }
            OperatorCommand::ArtifactSubmit { artifact } => {
                self.require_active(name)?;
                self.review(artifact, ReviewAction::Submit).map(|r| Some(format!("correct: {}", r.correct == Some(true))))
            }
        }
    }

    /// Report a detection that did not come from the fleet stream, such as
    /// one the operator spotted in a camera feed.
    pub fn add_report(&mut self, detection: &Detection) -> Result<ArtifactReport, ServiceError> {
        if self.store.snapshot().artifacts.contains_key(&ArtifactReport::from_detection(detection, 0.0).id) {
            return Err(ServiceError::Rejected(format!("detection `{}` is already reported", detection.id)));
        }
        let report = ArtifactReport::from_detection(detection, self.flag_threshold);
        self.store.append(self.now, EventBody::Artifact(ArtifactEvent::Reported { report: report.clone() }))?;
        Ok(report)
    }

    /// Artifact review through the command log.
    pub fn review_artifact(&mut self, id: &str, action: ReviewAction) -> Result<ArtifactReport, ServiceError> {
        let cmd = OperatorCommand::ArtifactReview { artifact: id.to_string(), action };
        self.apply_command(cmd)?;
        Ok(self.store.snapshot().artifacts[id].clone())
    }

    fn review(&mut self, id: &str, action: ReviewAction) -> Result<ArtifactReport, ServiceError> {
        let snap = self.store.snapshot();
        let mut report = snap.artifacts.get(id).cloned().ok_or_else(|| ServiceError::UnknownTarget(id.to_string()))?;
        let now = self.now;
        let close_review = |r: &mut ArtifactReport| {
            if let Some(opened) = r.review_opened_at.take() {
                r.reviewed_in += now - opened;
            }
        };
        let terminal = |r: &ArtifactReport| matches!(r.status, ArtifactStatus::Submitted | ArtifactStatus::Rejected);
        match action {
            ReviewAction::Open => {
                if terminal(&report) {
                    return Err(ServiceError::Rejected(format!("artifact `{id}` is already {:?}", report.status)));
                }
                report.review_opened_at.get_or_insert(now);
            }
            ReviewAction::Accept => {
                if report.status != ArtifactStatus::Unreviewed {
                    return Err(ServiceError::Rejected(format!("artifact `{id}` is already {:?}", report.status)));
                }
                report.status = ArtifactStatus::Accepted;
                close_review(&mut report);
            }
            ReviewAction::Reject => {
                if terminal(&report) {
                    return Err(ServiceError::Rejected(format!("artifact `{id}` is already {:?}", report.status)));
                }
                report.status = ArtifactStatus::Rejected;
                close_review(&mut report);
            }
            ReviewAction::Adjust { dx, dy, dz } => {
                if terminal(&report) {
                    return Err(ServiceError::Rejected(format!("artifact `{id}` is already {:?}", report.status)));
                }
                let p = report.effective_position();
                report.adjusted_position = Some([p[0] + dx, p[1] + dy, p[2] + dz]);
            }
            ReviewAction::Submit => {
                match report.status {
                    ArtifactStatus::Accepted => {}
                    ArtifactStatus::Submitted => {
                        return Err(ServiceError::Rejected(format!("artifact `{id}` was already submitted")))
                    }
                    other => {
                        return Err(ServiceError::Rejected(format!("artifact `{id}` must be accepted first, it is {other:?}")))
                    }
                }
                if snap.budget == 0 {
                    return Err(ServiceError::BudgetExhausted);
                }
                report.status = ArtifactStatus::Submitted;
                report.correct = Some(self.fleet.score(&report.class, report.effective_position()));
                close_review(&mut report);
            }
        }
        self.store.append(now, EventBody::Artifact(ArtifactEvent::Updated { report: report.clone() }))?;
        Ok(report)
    }

    /// Append UI telemetry; timestamps must not decrease within the batch.
    pub fn ingest_telemetry(&mut self, batch: TelemetryBatch) -> Result<Vec<u64>, ServiceError> {
        for w in batch.samples.windows(2) {
            if w[1].t < w[0].t {
                return Err(ServiceError::Telemetry(format!("cursor sample at {} follows {}", w[1].t, w[0].t)));
            }
        }
        for w in batch.views.windows(2) {
            if w[1].t < w[0].t {
                return Err(ServiceError::Telemetry(format!("view switch at {} follows {}", w[1].t, w[0].t)));
            }
        }
        let mut seqs = Vec::with_capacity(batch.samples.len() + batch.views.len());
        let mut samples = batch.samples.into_iter().peekable();
        let mut views = batch.views.into_iter().peekable();
        loop {
            let take_view = match (samples.peek(), views.peek()) {
                (None, None) => break,
                (Some(_), None) => false,
                (None, Some(_)) => true,
                (Some(s), Some(v)) => v.t <= s.t,
            };
            let (at, body) = if take_view {
                let v = views.next().expect("peeked");
                (v.t, EventBody::ViewSwitch(v))
            } else {
                let s = samples.next().expect("peeked");
                (s.t, EventBody::CursorSample(s))
            };
            seqs.push(self.store.append(at, body)?);
        }
        Ok(seqs)
    }
}

#[cfg(test)]
mod tests;
