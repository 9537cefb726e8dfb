use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{generate_tasks, RobotId, Seconds};

/// Template document schema version understood by [`MissionTemplate::from_json`].
pub const SCHEMA_VERSION: u32 = 1;

const DEFAULT_TEMPLATE: &str = include_str!("../../templates/default.json");
const BASELINE_TEMPLATE: &str = include_str!("../../templates/baseline.json");

/// Human involvement required by a task.
///
/// `pre_*` gates and `gonogo` block the start of execution; `signoff_*`
/// gates block completion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gate {
    #[default]
    None,
    PreOperator,
    PrePitcrew,
    SignoffOperator,
    SignoffPitcrew,
    Gonogo,
}

impl Gate {
    pub fn is_pre(self) -> bool {
        matches!(self, Gate::PreOperator | Gate::PrePitcrew | Gate::Gonogo)
    }

    pub fn is_signoff(self) -> bool {
        matches!(self, Gate::SignoffOperator | Gate::SignoffPitcrew)
    }

    /// The shared human resource a gated task occupies for its whole duration.
    pub fn resource(self) -> Option<Resource> {
        match self {
            Gate::None => None,
            Gate::PreOperator | Gate::SignoffOperator | Gate::Gonogo => Some(Resource::Operator),
            Gate::PrePitcrew | Gate::SignoffPitcrew => Some(Resource::PitCrew),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resource {
    Operator,
    PitCrew,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Setup,
    Deployment,
    Exploration,
}

/// Which instances a dependency reference resolves to after per-robot instantiation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DepScope {
    /// The instance of a robot task-def belonging to the same robot.
    SameRobot,
    /// The single instance of a base task-def.
    Base,
    /// Every robot's instance of a robot task-def.
    AllRobots,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepRef {
    pub task: String,
    pub scope: DepScope,
}

impl DepRef {
    pub fn new(task: impl Into<String>, scope: DepScope) -> Self {
        Self { task: task.into(), scope }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskDef {
    pub id: String,
    pub label: String,
    pub duration: Seconds,
    pub earliest_start: Seconds,
    pub latest_end: Seconds,
    #[serde(default)]
    pub deps: Vec<DepRef>,
    #[serde(default)]
    pub gate: Gate,
    pub phase: Phase,
}

impl TaskDef {
    pub fn new(id: &str, duration: Seconds, window: (Seconds, Seconds), phase: Phase) -> Self {
        Self {
            id: id.to_string(),
            label: id.to_string(),
            duration,
            earliest_start: window.0,
            latest_end: window.1,
            deps: Vec::new(),
            gate: Gate::None,
            phase,
        }
    }

    pub fn with_gate(mut self, gate: Gate) -> Self {
        self.gate = gate;
        self
    }

    pub fn with_dep(mut self, task: &str, scope: DepScope) -> Self {
        self.deps.push(DepRef::new(task, scope));
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseWindows {
    pub setup_window: [Seconds; 2],
    pub exploration_window: [Seconds; 2],
}

impl PhaseWindows {
    pub fn exploration_start(&self) -> Seconds {
        self.exploration_window[0]
    }

    pub fn exploration_length(&self) -> Seconds {
        self.exploration_window[1] - self.exploration_window[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceLimits {
    pub operator_capacity: u32,
    pub pit_crew_capacity: u32,
}

impl ResourceLimits {
    pub fn capacity(&self, resource: Resource) -> u32 {
        match resource {
            Resource::Operator => self.operator_capacity,
            Resource::PitCrew => self.pit_crew_capacity,
        }
    }
}

impl Default for ResourceLimits {
    fn default() -> Self {
        Self { operator_capacity: 1, pit_crew_capacity: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionTemplate {
    pub schema: u32,
    pub base_tasks: Vec<TaskDef>,
    pub robot_tasks: Vec<TaskDef>,
    pub phases: PhaseWindows,
    pub resources: ResourceLimits,
    /// Base task whose operator gate prompts for the robots to deploy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robot_selection_task: Option<String>,
}

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("template parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported template schema {found} (expected {SCHEMA_VERSION})")]
    UnsupportedSchema { found: u32 },
    #[error("duplicate task-def id `{0}`")]
    DuplicateId(String),
    #[error("task `{task}`: dependency on unknown task-def `{dep}`")]
    DanglingDependency { task: String, dep: String },
    #[error("task `{task}`: dependency `{dep}` has scope {scope:?} which cannot refer to it")]
    ScopeMismatch { task: String, dep: String, scope: DepScope },
    #[error("task `{task}`: window violation in `{field}`: {detail}")]
    WindowViolation { task: String, field: &'static str, detail: String },
    #[error("task `{task}`: gonogo gate requires phase deployment")]
    GonogoPhase { task: String },
    #[error("phase windows invalid in `{field}`: {detail}")]
    PhaseWindows { field: &'static str, detail: String },
    #[error("operator_capacity must be 1 (single operator), got {0}")]
    OperatorCapacity(u32),
    #[error("robot_selection_task `{0}` is not a base task")]
    SelectionTask(String),
    #[error("dependency cycle through {0:?}")]
    Cycle(Vec<String>),
}

impl MissionTemplate {
    /// Parse and validate a template document.
    pub fn from_json(source: &str) -> Result<Self, TemplateError> {
        let value: serde_json::Value = serde_json::from_str(source)?;
        let schema = value.get("schema").and_then(|s| s.as_u64()).unwrap_or(0) as u32;
        if schema != SCHEMA_VERSION {
            return Err(TemplateError::UnsupportedSchema { found: schema });
        }
        let template: MissionTemplate = serde_json::from_value(value)?;
        template.validate()?;
        Ok(template)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("template serializes")
    }

    /// The shipped template: 8 base tasks and 13 per-robot tasks.
    pub fn default_mission() -> Self {
        Self::from_json(DEFAULT_TEMPLATE).expect("shipped default template is valid")
    }

    /// Manual-procedure variant used as the no-automation comparison.
    pub fn manual_baseline() -> Self {
        Self::from_json(BASELINE_TEMPLATE).expect("shipped baseline template is valid")
    }

    pub fn base_def(&self, id: &str) -> Option<&TaskDef> {
        self.base_tasks.iter().find(|d| d.id == id)
    }

    pub fn robot_def(&self, id: &str) -> Option<&TaskDef> {
        self.robot_tasks.iter().find(|d| d.id == id)
    }

    pub fn validate(&self) -> Result<(), TemplateError> {
        if self.schema != SCHEMA_VERSION {
            return Err(TemplateError::UnsupportedSchema { found: self.schema });
        }
        let [t0, t1] = self.phases.setup_window;
        let [e0, t2] = self.phases.exploration_window;
        if !(t0 < t1) {
            return Err(TemplateError::PhaseWindows {
                field: "setup_window",
                detail: format!("start {t0} must precede end {t1}"),
            });
        }
        if (e0 - t1).abs() > 1e-9 || !(t1 < t2) {
            return Err(TemplateError::PhaseWindows {
                field: "exploration_window",
                detail: format!("must be [{t1}, t2] with t2 > {t1}, got [{e0}, {t2}]"),
            });
        }
        if self.resources.operator_capacity != 1 {
            return Err(TemplateError::OperatorCapacity(self.resources.operator_capacity));
        }

        let mut ids = BTreeSet::new();
        for def in self.base_tasks.iter().chain(&self.robot_tasks) {
            if !ids.insert(def.id.as_str()) {
                return Err(TemplateError::DuplicateId(def.id.clone()));
            }
        }
        let base: BTreeSet<&str> = self.base_tasks.iter().map(|d| d.id.as_str()).collect();
        let robot: BTreeSet<&str> = self.robot_tasks.iter().map(|d| d.id.as_str()).collect();

        for (def, is_robot) in self
            .base_tasks
            .iter()
            .map(|d| (d, false))
            .chain(self.robot_tasks.iter().map(|d| (d, true)))
        {
            check_def_window(def)?;
            if def.gate == Gate::Gonogo && def.phase != Phase::Deployment {
                return Err(TemplateError::GonogoPhase { task: def.id.clone() });
            }
            for dep in &def.deps {
                if !base.contains(dep.task.as_str()) && !robot.contains(dep.task.as_str()) {
                    return Err(TemplateError::DanglingDependency {
                        task: def.id.clone(),
                        dep: dep.task.clone(),
                    });
                }
                let ok = match dep.scope {
                    DepScope::Base => base.contains(dep.task.as_str()),
                    DepScope::SameRobot => is_robot && robot.contains(dep.task.as_str()),
                    DepScope::AllRobots => robot.contains(dep.task.as_str()),
                };
                if !ok {
                    return Err(TemplateError::ScopeMismatch {
                        task: def.id.clone(),
                        dep: dep.task.clone(),
                        scope: dep.scope,
                    });
                }
            }
        }
        if let Some(sel) = &self.robot_selection_task {
            match self.base_def(sel) {
                Some(def) if def.gate == Gate::PreOperator => {}
                _ => return Err(TemplateError::SelectionTask(sel.clone())),
            }
        }

        // Two probe robots expose same-robot, base, and cross-robot cycles alike.
        let probe = [RobotId::from("probe-a"), RobotId::from("probe-b")];
        let graph = generate_tasks(self, &probe).expect("probe robots are distinct");
        if let Err(cycle) = graph.topological_order() {
            let mut defs: Vec<String> = cycle
                .members
                .iter()
                .map(|id| id.as_str().rsplit('/').next().unwrap_or_default().to_string())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            defs.sort();
            return Err(TemplateError::Cycle(defs));
        }
        Ok(())
    }

    /// Number of tasks produced for `n` robots.
    pub fn task_count(&self, robots: usize) -> usize {
        self.base_tasks.len() + robots * self.robot_tasks.len()
    }

    /// Lookup of all defs by id.
    pub fn defs(&self) -> BTreeMap<&str, &TaskDef> {
        self.base_tasks
            .iter()
            .chain(&self.robot_tasks)
            .map(|d| (d.id.as_str(), d))
            .collect()
    }
}

fn check_def_window(def: &TaskDef) -> Result<(), TemplateError> {
    if !(def.duration > 0.0) || !def.duration.is_finite() {
        return Err(TemplateError::WindowViolation {
            task: def.id.clone(),
            field: "duration",
            detail: format!("duration must be positive, got {}", def.duration),
        });
    }
    if def.earliest_start < 0.0 {
        return Err(TemplateError::WindowViolation {
            task: def.id.clone(),
            field: "earliest_start",
            detail: format!("must be non-negative, got {}", def.earliest_start),
        });
    }
    if def.earliest_start + def.duration > def.latest_end + 1e-9 {
        return Err(TemplateError::WindowViolation {
            task: def.id.clone(),
            field: "latest_end",
            detail: format!(
                "earliest_start {} + duration {} exceeds latest_end {}",
                def.earliest_start, def.duration, def.latest_end
            ),
        });
    }
    Ok(())
}
