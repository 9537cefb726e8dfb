//! Mission domain model.
//!
//! A [`MissionTemplate`] is a declarative catalog of base-station tasks and
//! per-robot tasks. [`generate_tasks`] instantiates the robot tasks once per
//! deployed robot and wires the dependency edges into a [`TaskGraph`].

mod graph;
mod template;

pub use graph::{generate_tasks, GenerateError, Task, TaskGraph, TaskStatus};
pub use template::{
    DepRef, DepScope, Gate, MissionTemplate, Phase, PhaseWindows, Resource, ResourceLimits,
    TaskDef, TemplateError, SCHEMA_VERSION,
};

use std::fmt;

use serde::{Deserialize, Serialize};

/// Mission-clock time in seconds since mission start.
pub type Seconds = f64;

/// Identifier of a deployable robot, e.g. `spot1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RobotId(pub String);

impl RobotId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for RobotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for RobotId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

/// Identifier of one task instance in a generated graph.
///
/// Base-station tasks are named `base/<def>`, robot tasks `<robot>/<def>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InstanceId(pub String);

impl InstanceId {
    pub const BASE_PREFIX: &'static str = "base";

    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn base(def: &str) -> Self {
        Self(format!("{}/{def}", Self::BASE_PREFIX))
    }

    pub fn robot(robot: &RobotId, def: &str) -> Self {
        Self(format!("{robot}/{def}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for InstanceId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

/// Parse a comma separated robot list (`spot1,spot2`). Empty input yields no robots.
pub fn parse_robot_list(list: &str) -> Vec<RobotId> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(RobotId::from)
        .collect()
}
