use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::event::{
    Alert, ArtifactEvent, CourseEntry, EventBody, GateEvent, MissionEvent, MissionPhase, PlanEvent, TelemetryEvent,
};
use crate::executor::GateRequest;
use crate::model::{InstanceId, PhaseWindows, ResourceLimits, RobotId, Seconds, Task, TaskGraph, TaskStatus};
use crate::planner::{RelaxationReport, Schedule};
use crate::service::{ArtifactReport, ArtifactStatus};
use crate::sim::RobotState;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FoldError {
    #[error("expected seq {expected}, found {found}")]
    Sequence { expected: u64, found: u64 },
    #[error("unknown task `{0}`")]
    UnknownTask(InstanceId),
    #[error("unknown artifact `{0}`")]
    UnknownArtifact(String),
    #[error("artifact `{0}` is already submitted")]
    Resubmitted(String),
    #[error("submission with no budget left")]
    BudgetExhausted,
}

/// Mission state as a pure fold of the event log.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MissionSnapshot {
    /// Seq of the last applied event.
    pub head: Option<u64>,
    pub clock: Seconds,
    pub phase: MissionPhase,
    pub fleet: Vec<RobotId>,
    pub phases: Option<PhaseWindows>,
    pub limits: ResourceLimits,
    pub graph: TaskGraph,
    pub schedule: Option<Schedule>,
    pub plan_id: u64,
    pub last_planned_at: Option<Seconds>,
    pub relaxation: Option<RelaxationReport>,
    pub robots: BTreeMap<RobotId, RobotState>,
    pub artifacts: BTreeMap<String, ArtifactReport>,
    pub initial_budget: u32,
    pub budget: u32,
    pub submitted: u32,
    pub open_gates: BTreeMap<String, GateRequest>,
    pub course_entries: Vec<CourseEntry>,
    pub alerts: Vec<Alert>,
    pub view: Option<String>,
    pub commands: u64,
}

impl MissionSnapshot {
    pub fn next_seq(&self) -> u64 {
        self.head.map_or(0, |h| h + 1)
    }

    pub fn apply(&mut self, event: &TelemetryEvent) -> Result<(), FoldError> {
        let expected = self.next_seq();
        if event.seq != expected {
            return Err(FoldError::Sequence { expected, found: event.seq });
        }
        match &event.body {
            EventBody::Mission(m) => self.apply_mission(m),
            EventBody::TaskStatus(c) => {
                let task = self.graph.task_mut(&c.task).ok_or_else(|| FoldError::UnknownTask(c.task.clone()))?;
                task.status = c.status;
                task.attempts = c.attempts;
                task.deadline_extension = c.deadline_extension;
                task.started_at = c.started_at;
            }
            EventBody::Gate(GateEvent::Opened(req)) => {
                self.open_gates.insert(req.id.clone(), req.clone());
            }
            EventBody::Gate(GateEvent::Resolved { request, .. }) => {
                self.open_gates.remove(request);
            }
            EventBody::Plan(PlanEvent::Updated { plan_id, schedule, .. }) => {
                self.plan_id = *plan_id;
                self.last_planned_at = Some(schedule.planned_at);
                self.relaxation = schedule.relaxation.clone().filter(|r| !r.is_empty());
                self.schedule = Some(schedule.clone());
            }
            EventBody::Plan(PlanEvent::Unchanged { plan_id, planned_at, .. }) => {
                self.plan_id = *plan_id;
                self.last_planned_at = Some(*planned_at);
            }
            EventBody::Plan(PlanEvent::Failed { .. }) | EventBody::Relaxation(_) => {}
            EventBody::RobotHealth(state) => {
                self.robots.insert(state.id.clone(), state.clone());
            }
            EventBody::CourseEntry(entry) => self.course_entries.push(entry.clone()),
            EventBody::Artifact(ArtifactEvent::Reported { report }) => {
                self.artifacts.insert(report.id.clone(), report.clone());
            }
            EventBody::Artifact(ArtifactEvent::Updated { report }) => {
                let prev = self
                    .artifacts
                    .get(&report.id)
                    .ok_or_else(|| FoldError::UnknownArtifact(report.id.clone()))?;
                if prev.status == ArtifactStatus::Submitted {
                    return Err(FoldError::Resubmitted(report.id.clone()));
                }
                if report.status == ArtifactStatus::Submitted {
                    if self.budget == 0 {
                        return Err(FoldError::BudgetExhausted);
                    }
                    self.budget -= 1;
                    self.submitted += 1;
                }
                self.artifacts.insert(report.id.clone(), report.clone());
            }
            EventBody::CursorSample(_) => {}
            EventBody::ViewSwitch(v) => self.view = Some(v.view.clone()),
            EventBody::OperatorCommand(_) => self.commands += 1,
            EventBody::Alert(a) => self.alerts.push(a.clone()),
        }
        self.head = Some(event.seq);
        self.clock = self.clock.max(event.at);
        Ok(())
    }

    fn apply_mission(&mut self, event: &MissionEvent) {
        match event {
            MissionEvent::Configured { fleet, phases, limits, submission_budget } => {
                self.fleet = fleet.clone();
                self.phases = Some(*phases);
                self.limits = *limits;
                self.initial_budget = *submission_budget;
                self.budget = *submission_budget;
            }
            MissionEvent::Started => self.phase = MissionPhase::Setup,
            MissionEvent::TasksGenerated { graph } => {
                let mut next = graph.clone();
                for (id, task) in next.tasks.iter_mut() {
                    if let Some(old) = self.graph.tasks.get(id) {
                        carry_runtime(task, old);
                    }
                }
                self.graph = next;
            }
            MissionEvent::PhaseChanged { phase } => self.phase = *phase,
        }
    }

    /// Tasks matching the filters (empty filter = any), ordered by robot
    /// then scheduled start.
    pub fn query_tasks(&self, statuses: &[TaskStatus], robots: &[RobotId]) -> Vec<&Task> {
        let mut out: Vec<&Task> = self
            .graph
            .tasks
            .values()
            .filter(|t| statuses.is_empty() || statuses.contains(&t.status))
            .filter(|t| robots.is_empty() || t.robot.as_ref().is_some_and(|r| robots.contains(r)))
            .collect();
        let start = |t: &Task| {
            self.schedule
                .as_ref()
                .and_then(|s| s.entry(&t.instance_id))
                .map_or(f64::INFINITY, |e| e.start)
        };
        out.sort_by(|a, b| {
            a.robot
                .cmp(&b.robot)
                .then(start(a).total_cmp(&start(b)))
                .then_with(|| a.instance_id.cmp(&b.instance_id))
        });
        out
    }

    pub fn status_counts(&self) -> BTreeMap<TaskStatus, usize> {
        let mut counts = BTreeMap::new();
        for t in self.graph.tasks.values() {
            *counts.entry(t.status).or_insert(0) += 1;
        }
        counts
    }
}

fn carry_runtime(task: &mut Task, old: &Task) {
    task.status = old.status;
    task.attempts = old.attempts;
    task.deadline_extension = old.deadline_extension;
    task.started_at = old.started_at;
}
