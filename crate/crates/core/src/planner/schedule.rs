//! Serial schedule generation with chronological backtracking.
//!
//! The first descent is the plain serial scheme: repeatedly take the
//! eligible task with the smallest `(earliest start, latest end, robot, def)`
//! key and place it at the earliest time that satisfies precedence, its
//! window and resource capacities. If some task can no longer meet its
//! latest start, the search backtracks over the choice of the next task.
//! Each complete descent yields an active schedule, and every active
//! schedule is reachable by some choice sequence, so an exhausted search
//! proves resource infeasibility.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::stn::{Bounds, Stn, Witness};
use super::PlanningProblem;
use crate::model::{InstanceId, Resource, Seconds};

const EPS: f64 = 1e-9;

/// Node budget for the backtracking search.
pub const DEFAULT_SEARCH_BUDGET: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub start: Seconds,
    pub end: Seconds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxedTask {
    pub task: InstanceId,
    pub original_latest_end: Seconds,
    pub relaxed_latest_end: Seconds,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RelaxationReport {
    pub relaxed_tasks: Vec<RelaxedTask>,
    pub total_slip: Seconds,
    pub operator_notified: bool,
}

impl RelaxationReport {
    pub fn is_empty(&self) -> bool {
        self.relaxed_tasks.is_empty()
    }

    pub fn relaxed_end(&self, task: &InstanceId) -> Option<Seconds> {
        self.relaxed_tasks.iter().find(|r| &r.task == task).map(|r| r.relaxed_latest_end)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Schedule {
    pub entries: BTreeMap<InstanceId, ScheduleEntry>,
    pub planned_at: Seconds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relaxation: Option<RelaxationReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub blocked: Vec<InstanceId>,
}

impl Schedule {
    pub fn entry(&self, id: &InstanceId) -> Option<&ScheduleEntry> {
        self.entries.get(id)
    }

    /// Same timing decisions, ignoring when the plan was computed.
    pub fn same_plan(&self, other: &Schedule) -> bool {
        self.entries == other.entries && self.relaxation == other.relaxation && self.blocked == other.blocked
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Infeasible {
    #[error("temporally infeasible: {0}")]
    Temporal(Witness),
    #[error("resource infeasible: no placement of `{task}` meets its latest start {latest_start}")]
    Resource { task: InstanceId, latest_start: Seconds },
    #[error("search budget of {nodes} nodes exhausted")]
    SearchExhausted { nodes: usize },
}

/// Resource-feasible schedule for `problem`, or why none exists.
pub fn schedule(problem: &PlanningProblem) -> Result<Schedule, Infeasible> {
    schedule_with_budget(problem, DEFAULT_SEARCH_BUDGET)
}

pub fn schedule_with_budget(problem: &PlanningProblem, budget: usize) -> Result<Schedule, Infeasible> {
    let stn = Stn::from_problem(problem);
    stn.check().map_err(Infeasible::Temporal)?;
    let bounds = stn.bounds(problem.tasks.len());
    let mut search = Search::new(problem, bounds, budget);
    search.run()?;
    let entries = problem
        .tasks
        .iter()
        .zip(&search.start)
        .map(|(t, s)| {
            let start = s.expect("complete search places every task");
            (t.id.clone(), ScheduleEntry { start, end: start + t.duration })
        })
        .collect();
    Ok(Schedule { entries, planned_at: problem.now, relaxation: None, blocked: problem.blocked.clone() })
}

struct Search<'a> {
    problem: &'a PlanningProblem,
    bounds: Bounds,
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
    /// Tasks in priority order.
    priority: Vec<usize>,
    start: Vec<Option<Seconds>>,
    missing_preds: Vec<usize>,
    usage: BTreeMap<Resource, Vec<(Seconds, Seconds)>>,
    nodes: usize,
    budget: usize,
    first_failure: Option<(usize, Seconds)>,
}

impl<'a> Search<'a> {
    fn new(problem: &'a PlanningProblem, bounds: Bounds, budget: usize) -> Self {
        let n = problem.tasks.len();
        let preds = problem.predecessors();
        let mut succs = vec![Vec::new(); n];
        for &(a, b) in &problem.edges {
            succs[a].push(b);
        }
        let mut priority: Vec<usize> = (0..n).collect();
        priority.sort_by(|&a, &b| {
            let (ta, tb) = (&problem.tasks[a], &problem.tasks[b]);
            bounds.earliest_start[a]
                .total_cmp(&bounds.earliest_start[b])
                .then(ta.latest_end.total_cmp(&tb.latest_end))
                .then_with(|| ta.order_key().cmp(&tb.order_key()))
        });
        let missing_preds = preds.iter().map(Vec::len).collect();
        Self {
            problem,
            bounds,
            preds,
            succs,
            priority,
            start: vec![None; n],
            missing_preds,
            usage: BTreeMap::new(),
            nodes: 0,
            budget,
            first_failure: None,
        }
    }

    fn run(&mut self) -> Result<(), Infeasible> {
        // Running tasks are fixed before anything else is placed.
        let frozen: Vec<usize> = (0..self.problem.tasks.len())
            .filter(|&i| self.problem.tasks[i].is_frozen())
            .collect();
        for i in frozen {
            let start = self.problem.tasks[i].frozen_start.unwrap();
            self.place(i, start);
        }
        let remaining = self.start.iter().filter(|s| s.is_none()).count();
        match self.descend(remaining) {
            Some(true) => Ok(()),
            Some(false) => {
                let (i, ls) = self.first_failure.unwrap_or((0, 0.0));
                Err(Infeasible::Resource { task: self.problem.tasks[i].id.clone(), latest_start: ls })
            }
            None => Err(Infeasible::SearchExhausted { nodes: self.nodes }),
        }
    }

    fn place(&mut self, i: usize, start: Seconds) {
        self.start[i] = Some(start);
        for &s in &self.succs[i] {
            self.missing_preds[s] -= 1;
        }
        let t = &self.problem.tasks[i];
        if let Some(r) = t.resource {
            self.usage.entry(r).or_default().push((start, start + t.duration));
        }
    }

    fn unplace(&mut self, i: usize) {
        self.start[i] = None;
        for &s in &self.succs[i] {
            self.missing_preds[s] += 1;
        }
        if let Some(r) = self.problem.tasks[i].resource {
            self.usage.get_mut(&r).expect("placed resource task").pop();
        }
    }

    /// Earliest precedence- and resource-feasible start of an eligible task.
    fn earliest_slot(&self, i: usize) -> Seconds {
        let t = &self.problem.tasks[i];
        let mut t0 = self.bounds.earliest_start[i];
        for &p in &self.preds[i] {
            let pt = &self.problem.tasks[p];
            t0 = t0.max(self.start[p].expect("eligible task has placed preds") + pt.duration);
        }
        let Some(r) = t.resource else { return t0 };
        let cap = self.problem.limits.capacity(r) as usize;
        let intervals = self.usage.get(&r).map(Vec::as_slice).unwrap_or(&[]);
        let mut candidates: Vec<Seconds> = std::iter::once(t0)
            .chain(intervals.iter().map(|iv| iv.1).filter(|&e| e > t0))
            .collect();
        candidates.sort_by(f64::total_cmp);
        for c in candidates {
            if fits(intervals, c, c + t.duration, cap) {
                return c;
            }
        }
        f64::INFINITY
    }

    /// `Some(true)` on success, `Some(false)` if this branch is infeasible,
    /// `None` when the node budget ran out.
    fn descend(&mut self, remaining: usize) -> Option<bool> {
        if remaining == 0 {
            return Some(true);
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            return None;
        }
        let eligible: Vec<usize> = self
            .priority
            .iter()
            .copied()
            .filter(|&i| self.start[i].is_none() && self.missing_preds[i] == 0)
            .collect();
        // Slots only move later as more tasks are placed, so one task that
        // already misses its latest start dooms the whole branch.
        let mut slots = Vec::with_capacity(eligible.len());
        for &i in &eligible {
            let slot = self.earliest_slot(i);
            if slot > self.bounds.latest_start[i] + EPS {
                if self.first_failure.is_none() {
                    self.first_failure = Some((i, self.bounds.latest_start[i]));
                }
                return Some(false);
            }
            slots.push(slot);
        }
        for (&i, &slot) in eligible.iter().zip(&slots) {
            self.place(i, slot);
            let r = self.descend(remaining - 1);
            match r {
                Some(true) => return Some(true),
                None => {
                    self.unplace(i);
                    return None;
                }
                Some(false) => self.unplace(i),
            }
        }
        Some(false)
    }
}

/// Whether `[start, end)` can be added to `intervals` without exceeding `cap` concurrent uses.
fn fits(intervals: &[(Seconds, Seconds)], start: Seconds, end: Seconds, cap: usize) -> bool {
    if cap == 0 {
        return false;
    }
    let overlapping: Vec<&(Seconds, Seconds)> =
        intervals.iter().filter(|iv| iv.0 < end - EPS && iv.1 > start + EPS).collect();
    if overlapping.len() < cap {
        return true;
    }
    // Peak usage inside the window occurs at the window start or at some interval start.
    let points = std::iter::once(start).chain(overlapping.iter().map(|iv| iv.0).filter(|&s| s > start));
    for p in points {
        let used = overlapping.iter().filter(|iv| iv.0 <= p + EPS && iv.1 > p + EPS).count();
        if used >= cap {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ResourceLimits;
    use crate::planner::PlanTask;

    fn problem(tasks: Vec<PlanTask>, edges: Vec<(usize, usize)>, now: f64) -> PlanningProblem {
        PlanningProblem::new(tasks, edges, now, ResourceLimits::default())
    }

    fn start_of(s: &Schedule, id: &str) -> f64 {
        s.entries[&InstanceId::from(id)].start
    }

    #[test]
    fn single_operator_serializes_signoffs() {
        let p = problem(
            vec![
                PlanTask::new("a", 10.0, (0.0, 100.0)).with_resource(Resource::Operator),
                PlanTask::new("b", 10.0, (0.0, 100.0)).with_resource(Resource::Operator),
            ],
            vec![],
            0.0,
        );
        let s = schedule(&p).unwrap();
        let mut starts = vec![start_of(&s, "a"), start_of(&s, "b")];
        starts.sort_by(f64::total_cmp);
        assert_eq!(starts, vec![0.0, 10.0]);
    }

    #[test]
    fn lone_task_starts_immediately() {
        let p = problem(vec![PlanTask::new("a", 30.0, (0.0, 100.0))], vec![], 0.0);
        let s = schedule(&p).unwrap();
        assert_eq!(s.entries[&InstanceId::from("a")], ScheduleEntry { start: 0.0, end: 30.0 });
    }

    #[test]
    fn backtracks_when_greedy_order_misses_deadline() {
        // Greedy key picks `a` first (same release, earlier latest end tie-broken by id
        // after `latest_end`), but `b` has the tight deadline behind a successor.
        let p = problem(
            vec![
                PlanTask::new("a", 10.0, (0.0, 30.0)).with_resource(Resource::Operator),
                PlanTask::new("b", 5.0, (0.0, 100.0)).with_resource(Resource::Operator),
                PlanTask::new("c", 5.0, (0.0, 10.0)),
            ],
            vec![(1, 2)],
            0.0,
        );
        let s = schedule(&p).unwrap();
        assert_eq!(start_of(&s, "b"), 0.0);
        assert_eq!(start_of(&s, "c"), 5.0);
        assert_eq!(start_of(&s, "a"), 5.0);
    }

    #[test]
    fn resource_infeasible_is_reported() {
        let p = problem(
            vec![
                PlanTask::new("a", 10.0, (0.0, 15.0)).with_resource(Resource::Operator),
                PlanTask::new("b", 10.0, (0.0, 15.0)).with_resource(Resource::Operator),
            ],
            vec![],
            0.0,
        );
        assert!(matches!(schedule(&p), Err(Infeasible::Resource { .. })));
    }

    #[test]
    fn frozen_task_keeps_start_and_delays_successor() {
        let p = problem(
            vec![PlanTask::new("a", 20.0, (0.0, 100.0)).frozen(3.0), PlanTask::new("b", 5.0, (0.0, 100.0))],
            vec![(0, 1)],
            10.0,
        );
        let s = schedule(&p).unwrap();
        assert_eq!(start_of(&s, "a"), 3.0);
        assert_eq!(start_of(&s, "b"), 23.0);
    }

    #[test]
    fn fits_counts_peak_not_total() {
        let iv = [(0.0, 5.0), (5.0, 10.0)];
        assert!(fits(&iv, 0.0, 10.0, 2));
        assert!(!fits(&iv, 0.0, 10.0, 1));
        assert!(fits(&iv, 10.0, 12.0, 1));
    }
}
