use std::collections::{BTreeMap, BTreeSet};

use crate::model::{InstanceId, Phase, Resource, ResourceLimits, RobotId, Seconds, TaskGraph, TaskStatus};

/// One schedulable unit as seen by the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanTask {
    pub id: InstanceId,
    pub robot: Option<RobotId>,
    pub def_id: String,
    /// Effective duration. For frozen tasks this already covers any overrun up to `now`.
    pub duration: Seconds,
    pub earliest_start: Seconds,
    pub latest_end: Seconds,
    pub phase: Phase,
    pub resource: Option<Resource>,
    /// Start time of a task that is already running.
    pub frozen_start: Option<Seconds>,
}

impl PlanTask {
    pub fn new(id: &str, duration: Seconds, window: (Seconds, Seconds)) -> Self {
        Self {
            id: InstanceId::from(id),
            robot: None,
            def_id: id.to_string(),
            duration,
            earliest_start: window.0,
            latest_end: window.1,
            phase: Phase::Setup,
            resource: None,
            frozen_start: None,
        }
    }

    pub fn with_resource(mut self, resource: Resource) -> Self {
        self.resource = Some(resource);
        self
    }

    pub fn frozen(mut self, start: Seconds) -> Self {
        self.frozen_start = Some(start);
        self
    }

    pub fn order_key(&self) -> (u8, &str, &str) {
        match &self.robot {
            None => (0, "", self.def_id.as_str()),
            Some(r) => (1, r.as_str(), self.def_id.as_str()),
        }
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen_start.is_some()
    }

    /// Lower bound on the start imposed by the window and the clock.
    pub fn release(&self, now: Seconds) -> Seconds {
        self.earliest_start.max(now)
    }

    pub fn relaxable(&self) -> bool {
        matches!(self.phase, Phase::Setup | Phase::Deployment)
    }
}

/// Remaining work to schedule: pending and running tasks plus the edges between them.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanningProblem {
    pub tasks: Vec<PlanTask>,
    /// `(pred, succ)` index pairs into `tasks`.
    pub edges: Vec<(usize, usize)>,
    pub now: Seconds,
    pub limits: ResourceLimits,
    /// Tasks that cannot run because a (transitive) predecessor failed.
    pub blocked: Vec<InstanceId>,
}

impl PlanningProblem {
    pub fn new(tasks: Vec<PlanTask>, edges: Vec<(usize, usize)>, now: Seconds, limits: ResourceLimits) -> Self {
        Self { tasks, edges, now, limits, blocked: Vec::new() }
    }

    /// Build the problem from a task graph's current statuses.
    ///
    /// Succeeded tasks drop out with their constraints satisfied. Failed
    /// tasks drop out and block every transitive successor. Running tasks
    /// are frozen at `started_at` and projected to end no earlier than `now`.
    pub fn from_graph(graph: &TaskGraph, now: Seconds, limits: ResourceLimits) -> Self {
        let mut blocked: BTreeSet<InstanceId> = BTreeSet::new();
        for t in graph.tasks.values().filter(|t| t.status == TaskStatus::Failed) {
            blocked.extend(graph.transitive_successors(&t.instance_id));
        }
        let mut index: BTreeMap<&InstanceId, usize> = BTreeMap::new();
        let mut tasks = Vec::new();
        for t in graph.tasks.values() {
            if t.status.is_terminal() || blocked.contains(&t.instance_id) {
                continue;
            }
            let nominal = t.def.duration + t.deadline_extension;
            let (duration, frozen_start) = if t.status.is_running() {
                let start = t.started_at.unwrap_or(now);
                (nominal.max(now - start), Some(start))
            } else {
                (nominal, None)
            };
            index.insert(&t.instance_id, tasks.len());
            tasks.push(PlanTask {
                id: t.instance_id.clone(),
                robot: t.robot.clone(),
                def_id: t.def.id.clone(),
                duration,
                earliest_start: t.def.earliest_start,
                latest_end: t.def.latest_end,
                phase: t.def.phase,
                resource: t.def.gate.resource(),
                frozen_start,
            });
        }
        let edges = graph
            .edges
            .iter()
            .filter_map(|(a, b)| Some((*index.get(a)?, *index.get(b)?)))
            .collect();
        Self { tasks, edges, now, limits, blocked: blocked.into_iter().collect() }
    }

    pub fn index_of(&self, id: &InstanceId) -> Option<usize> {
        self.tasks.iter().position(|t| &t.id == id)
    }

    pub fn predecessors(&self) -> Vec<Vec<usize>> {
        let mut preds = vec![Vec::new(); self.tasks.len()];
        for &(a, b) in &self.edges {
            preds[b].push(a);
        }
        preds
    }

    pub fn with_deadlines(&self, deadlines: &[Seconds]) -> Self {
        let mut p = self.clone();
        for (t, &d) in p.tasks.iter_mut().zip(deadlines) {
            t.latest_end = d;
        }
        p
    }
}
