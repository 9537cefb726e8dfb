use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{DepScope, InstanceId, MissionTemplate, RobotId, Seconds, TaskDef};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    #[default]
    Pending,
    AwaitingGate,
    Active,
    Succeeded,
    Failed,
}

impl TaskStatus {
    pub const ALL: [TaskStatus; 5] = [
        TaskStatus::Pending,
        TaskStatus::AwaitingGate,
        TaskStatus::Active,
        TaskStatus::Succeeded,
        TaskStatus::Failed,
    ];

    pub fn is_terminal(self) -> bool {
        matches!(self, TaskStatus::Succeeded | TaskStatus::Failed)
    }

    /// Dispatched and not yet terminal.
    pub fn is_running(self) -> bool {
        matches!(self, TaskStatus::Active | TaskStatus::AwaitingGate)
    }
}

impl fmt::Display for TaskStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TaskStatus::Pending => "pending",
            TaskStatus::AwaitingGate => "awaiting_gate",
            TaskStatus::Active => "active",
            TaskStatus::Succeeded => "succeeded",
            TaskStatus::Failed => "failed",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub instance_id: InstanceId,
    pub def: TaskDef,
    /// `None` for base-station tasks.
    pub robot: Option<RobotId>,
    pub status: TaskStatus,
    pub attempts: u32,
    pub deadline_extension: Seconds,
    /// Mission time at which the task was dispatched, while running or after.
    #[serde(default)]
    pub started_at: Option<Seconds>,
}

impl Task {
    pub fn new(instance_id: InstanceId, def: TaskDef, robot: Option<RobotId>) -> Self {
        Self {
            instance_id,
            def,
            robot,
            status: TaskStatus::Pending,
            attempts: 0,
            deadline_extension: 0.0,
            started_at: None,
        }
    }

    /// Deterministic tie-break key: base tasks first, then by robot id, then def id.
    pub fn order_key(&self) -> (u8, &str, &str) {
        match &self.robot {
            None => (0, "", self.def.id.as_str()),
            Some(r) => (1, r.as_str(), self.def.id.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("dependency cycle through {members:?}")]
pub struct CycleError {
    pub members: Vec<InstanceId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("duplicate robot id `{0}`")]
    DuplicateRobot(RobotId),
    #[error("robot id `{0}` is reserved")]
    ReservedRobot(RobotId),
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    robots: Vec<RobotId>,
    tasks: Vec<Task>,
    edges: Vec<(InstanceId, InstanceId)>,
}

/// Task instances plus precedence edges `(pred, succ)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "GraphRepr", into = "GraphRepr")]
pub struct TaskGraph {
    pub robots: Vec<RobotId>,
    pub tasks: BTreeMap<InstanceId, Task>,
    pub edges: BTreeSet<(InstanceId, InstanceId)>,
    preds: BTreeMap<InstanceId, Vec<InstanceId>>,
    succs: BTreeMap<InstanceId, Vec<InstanceId>>,
}

impl From<GraphRepr> for TaskGraph {
    fn from(r: GraphRepr) -> Self {
        let mut g = TaskGraph::from_parts(r.tasks, r.edges);
        g.robots = r.robots;
        g
    }
}

impl From<TaskGraph> for GraphRepr {
    fn from(g: TaskGraph) -> Self {
        GraphRepr {
            robots: g.robots,
            tasks: g.tasks.into_values().collect(),
            edges: g.edges.into_iter().collect(),
        }
    }
}

impl TaskGraph {
    pub fn from_parts(
        tasks: impl IntoIterator<Item = Task>,
        edges: impl IntoIterator<Item = (InstanceId, InstanceId)>,
    ) -> Self {
        let tasks: BTreeMap<_, _> = tasks.into_iter().map(|t| (t.instance_id.clone(), t)).collect();
        let edges: BTreeSet<_> = edges.into_iter().collect();
        let mut preds: BTreeMap<InstanceId, Vec<InstanceId>> =
            tasks.keys().map(|k| (k.clone(), Vec::new())).collect();
        let mut succs = preds.clone();
        for (a, b) in &edges {
            succs.entry(a.clone()).or_default().push(b.clone());
            preds.entry(b.clone()).or_default().push(a.clone());
        }
        let mut robots: Vec<RobotId> = tasks.values().filter_map(|t| t.robot.clone()).collect();
        robots.sort();
        robots.dedup();
        Self { robots, tasks, edges, preds, succs }
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn task(&self, id: &InstanceId) -> Option<&Task> {
        self.tasks.get(id)
    }

    pub fn task_mut(&mut self, id: &InstanceId) -> Option<&mut Task> {
        self.tasks.get_mut(id)
    }

    pub fn predecessors(&self, id: &InstanceId) -> &[InstanceId] {
        self.preds.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn successors(&self, id: &InstanceId) -> &[InstanceId] {
        self.succs.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// All tasks reachable from `id` along edges, excluding `id` itself.
    pub fn transitive_successors(&self, id: &InstanceId) -> BTreeSet<InstanceId> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<&InstanceId> = self.successors(id).iter().collect();
        while let Some(n) = stack.pop() {
            if seen.insert(n.clone()) {
                stack.extend(self.successors(n));
            }
        }
        seen
    }

    pub fn tasks_of<'a>(&'a self, robot: Option<&'a RobotId>) -> impl Iterator<Item = &'a Task> + 'a {
        self.tasks.values().filter(move |t| t.robot.as_ref() == robot)
    }

    /// Topological order with ties broken by `(robot-id, task-def id)`.
    pub fn topological_order(&self) -> Result<Vec<InstanceId>, CycleError> {
        let mut indegree: BTreeMap<&InstanceId, usize> =
            self.tasks.keys().map(|k| (k, self.predecessors(k).len())).collect();
        let mut ready: BinaryHeap<Reverse<((u8, &str, &str), &InstanceId)>> = BinaryHeap::new();
        for (id, deg) in &indegree {
            if *deg == 0 {
                ready.push(Reverse((self.tasks[*id].order_key(), *id)));
            }
        }
        let mut order = Vec::with_capacity(self.tasks.len());
        while let Some(Reverse((_, id))) = ready.pop() {
            order.push(id.clone());
            for s in self.successors(id) {
                let d = indegree.get_mut(s).expect("edge endpoint is a task");
                *d -= 1;
                if *d == 0 {
                    ready.push(Reverse((self.tasks[s].order_key(), s)));
                }
            }
        }
        if order.len() == self.tasks.len() {
            return Ok(order);
        }
        let remaining: BTreeSet<&InstanceId> =
            indegree.iter().filter(|(_, d)| **d > 0).map(|(k, _)| *k).collect();
        Err(CycleError { members: self.find_cycle(&remaining) })
    }

    fn find_cycle(&self, remaining: &BTreeSet<&InstanceId>) -> Vec<InstanceId> {
        // Every remaining node has a remaining predecessor; walking backwards must revisit.
        let Some(start) = remaining.iter().next() else { return Vec::new() };
        let mut path: Vec<&InstanceId> = vec![start];
        let mut pos: BTreeMap<&InstanceId, usize> = BTreeMap::from([(*start, 0)]);
        loop {
            let cur = *path.last().unwrap();
            let next = self
                .predecessors(cur)
                .iter()
                .find(|p| remaining.contains(p))
                .expect("remaining node keeps a remaining predecessor");
            if let Some(&i) = pos.get(next) {
                let mut cycle: Vec<InstanceId> = path[i..].iter().map(|x| (*x).clone()).collect();
                cycle.reverse();
                return cycle;
            }
            pos.insert(next, path.len());
            path.push(next);
        }
    }
}

/// Instantiate `template` for `robots`.
///
/// Instance ids are derived from names only, so repeated calls with equal
/// inputs give identical graphs.
pub fn generate_tasks(template: &MissionTemplate, robots: &[RobotId]) -> Result<TaskGraph, GenerateError> {
    let mut seen = BTreeSet::new();
    for r in robots {
        if r.as_str() == InstanceId::BASE_PREFIX {
            return Err(GenerateError::ReservedRobot(r.clone()));
        }
        if !seen.insert(r) {
            return Err(GenerateError::DuplicateRobot(r.clone()));
        }
    }

    let mut tasks = Vec::with_capacity(template.task_count(robots.len()));
    let mut edges = Vec::new();

    let resolve = |dep_task: &str, scope: DepScope, owner: Option<&RobotId>| -> Vec<InstanceId> {
        match scope {
            DepScope::Base => vec![InstanceId::base(dep_task)],
            DepScope::SameRobot => owner.map(|r| InstanceId::robot(r, dep_task)).into_iter().collect(),
            DepScope::AllRobots => robots.iter().map(|r| InstanceId::robot(r, dep_task)).collect(),
        }
    };

    for def in &template.base_tasks {
        let id = InstanceId::base(&def.id);
        for dep in &def.deps {
            for pred in resolve(&dep.task, dep.scope, None) {
                edges.push((pred, id.clone()));
            }
        }
        tasks.push(Task::new(id, def.clone(), None));
    }
    for robot in robots {
        for def in &template.robot_tasks {
            let id = InstanceId::robot(robot, &def.id);
            for dep in &def.deps {
                for pred in resolve(&dep.task, dep.scope, Some(robot)) {
                    if pred != id {
                        edges.push((pred, id.clone()));
                    }
                }
            }
            tasks.push(Task::new(id, def.clone(), Some(robot.clone())));
        }
    }
    let mut graph = TaskGraph::from_parts(tasks, edges);
    graph.robots = robots.to_vec();
    Ok(graph)
}
