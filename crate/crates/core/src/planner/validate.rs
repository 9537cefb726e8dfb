//! Standalone schedule checker.
//!
//! Re-verifies a schedule against the raw problem data without reusing any
//! solver state: entry coverage, durations, windows (with reported
//! relaxations), precedence, and resource capacity by a sweep over start
//! instants.

use std::fmt;

use super::{PlanningProblem, Schedule};
use crate::model::{InstanceId, Resource};

const TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Missing(InstanceId),
    Unexpected(InstanceId),
    Duration { task: InstanceId, expected: f64, actual: f64 },
    Release { task: InstanceId, start: f64, release: f64 },
    FrozenMoved { task: InstanceId, start: f64, frozen: f64 },
    Deadline { task: InstanceId, end: f64, latest_end: f64 },
    Precedence { pred: InstanceId, succ: InstanceId },
    Capacity { resource: Resource, at: f64, used: usize, capacity: u32 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

pub fn validate_schedule(problem: &PlanningProblem, schedule: &Schedule) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let mut times = Vec::with_capacity(problem.tasks.len());
    for t in &problem.tasks {
        let Some(e) = schedule.entries.get(&t.id) else {
            out.push(Violation::Missing(t.id.clone()));
            times.push(None);
            continue;
        };
        times.push(Some((e.start, e.end)));
        if ((e.end - e.start) - t.duration).abs() > TOL {
            out.push(Violation::Duration { task: t.id.clone(), expected: t.duration, actual: e.end - e.start });
        }
        match t.frozen_start {
            Some(f) if (e.start - f).abs() > TOL => {
                out.push(Violation::FrozenMoved { task: t.id.clone(), start: e.start, frozen: f })
            }
            Some(_) => {}
            None => {
                let release = t.earliest_start.max(problem.now);
                if e.start < release - TOL {
                    out.push(Violation::Release { task: t.id.clone(), start: e.start, release });
                }
            }
        }
        let deadline = schedule
            .relaxation
            .as_ref()
            .and_then(|r| r.relaxed_end(&t.id))
            .unwrap_or(t.latest_end);
        if e.end > deadline + TOL {
            out.push(Violation::Deadline { task: t.id.clone(), end: e.end, latest_end: deadline });
        }
    }
    for id in schedule.entries.keys() {
        if !problem.tasks.iter().any(|t| &t.id == id) {
            out.push(Violation::Unexpected(id.clone()));
        }
    }
    for &(a, b) in &problem.edges {
        if let (Some((_, ea)), Some((sb, _))) = (times[a], times[b]) {
            if sb < ea - TOL {
                out.push(Violation::Precedence { pred: problem.tasks[a].id.clone(), succ: problem.tasks[b].id.clone() });
            }
        }
    }
    for resource in [Resource::Operator, Resource::PitCrew] {
        let capacity = problem.limits.capacity(resource);
        let users: Vec<(f64, f64, bool)> = problem
            .tasks
            .iter()
            .zip(&times)
            .filter(|(t, _)| t.resource == Some(resource))
            .filter_map(|(t, tm)| tm.map(|(s, e)| (s, e, t.is_frozen())))
            .collect();
        for &(at, _, _) in &users {
            let active: Vec<&(f64, f64, bool)> =
                users.iter().filter(|(s, e, _)| *s <= at + TOL && *e > at + TOL).collect();
            // Overlap among running tasks alone predates this plan.
            if active.len() > capacity as usize && active.iter().any(|(_, _, frozen)| !frozen) {
                out.push(Violation::Capacity { resource, at, used: active.len(), capacity });
            }
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}
