use serde::Serialize;

use crate::model::{RobotId, Seconds};
use crate::store::{EventBody, MissionEvent, MissionPhase, TelemetryEvent};

/// One robot per minute.
pub const DEPLOYMENT_GOAL: Seconds = 60.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeploymentRow {
    pub robot: RobotId,
    /// Seconds after the reference time.
    pub entry: Seconds,
    /// Seconds since the previous robot entered; empty for the first row.
    pub interval: Option<Seconds>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeploymentTable {
    /// Mission clock that entry times are measured from: the start of the
    /// exploration phase if the log records it, otherwise 0.
    pub reference: Seconds,
    pub rows: Vec<DeploymentRow>,
    pub count: usize,
    /// Reference to last entry.
    pub span: Seconds,
    pub average_per_robot: Seconds,
    pub max_interval: Option<Seconds>,
    pub goal: Seconds,
    /// Average and every gap between consecutive entries within the goal.
    pub meets_goal: bool,
}

pub fn deployment_times(events: &[TelemetryEvent]) -> DeploymentTable {
    let mut reference = None;
    let mut entries = Vec::new();
    for e in events {
        match &e.body {
            EventBody::Mission(MissionEvent::PhaseChanged { phase: MissionPhase::Exploration }) => {
                reference.get_or_insert(e.at);
            }
            EventBody::CourseEntry(c) => entries.push((c.at, c.robot.clone())),
            _ => {}
        }
    }
    let reference = reference.unwrap_or(0.0);
    entries.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));

    let mut rows: Vec<DeploymentRow> = Vec::with_capacity(entries.len());
    for (at, robot) in entries {
        let entry = at - reference;
        let interval = rows.last().map(|prev| entry - prev.entry);
        rows.push(DeploymentRow { robot, entry, interval });
    }
    let count = rows.len();
    let span = rows.last().map_or(0.0, |r| r.entry);
    let average_per_robot = if count == 0 { 0.0 } else { span / count as f64 };
    let max_interval = rows.iter().filter_map(|r| r.interval).reduce(f64::max);
    let meets_goal =
        count > 0 && average_per_robot <= DEPLOYMENT_GOAL && max_interval.is_none_or(|m| m <= DEPLOYMENT_GOAL);
    DeploymentTable {
        reference,
        rows,
        count,
        span,
        average_per_robot,
        max_interval,
        goal: DEPLOYMENT_GOAL,
        meets_goal,
    }
}
