//! Iterative relaxation of latest end times.
//!
//! Only setup- and deployment-phase deadlines may move, each in whole
//! multiples of `step`. The per-task lower bound is the slip that lets the
//! task's earliest possible finish (temporal constraints only) meet its
//! deadline; no schedule can do with less. If those slips already admit a
//! schedule the total is minimal. Otherwise extra steps are distributed
//! over the relaxable tasks in order of increasing total until the search
//! budget runs out, and finally the deadlines are lifted entirely and the
//! resulting overshoot is charged.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::schedule::{schedule_with_budget, Infeasible, RelaxationReport, RelaxedTask, Schedule};
use super::stn::{Stn, Witness};
use super::PlanningProblem;
use crate::model::Seconds;

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxSettings {
    pub step: Seconds,
    pub max_slip: Seconds,
    /// Number of candidate slip distributions tried beyond the lower bound.
    pub distribution_budget: usize,
    pub search_budget: usize,
}

impl RelaxSettings {
    pub fn new(step: Seconds, max_slip: Seconds) -> Self {
        Self { step, max_slip, distribution_budget: 400, search_budget: 5_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HardInfeasible {
    #[error("non-relaxable constraints conflict: {0}")]
    Temporal(Witness),
    #[error("required slip {required}s exceeds the {max_slip}s cap")]
    SlipCap { required: Seconds, max_slip: Seconds },
    #[error("no relaxation within {max_slip}s admits a resource-feasible schedule")]
    Exhausted { max_slip: Seconds },
}

fn ceil_steps(overshoot: Seconds, step: Seconds) -> u64 {
    if overshoot <= EPS {
        0
    } else {
        (overshoot / step - 1e-9).ceil().max(1.0) as u64
    }
}

/// Schedule `problem` after relaxing deadlines by the least total slip found.
pub fn relax_and_schedule(
    problem: &PlanningProblem,
    settings: &RelaxSettings,
) -> Result<(Schedule, RelaxationReport), HardInfeasible> {
    let step = settings.step;
    let relaxable: Vec<usize> = (0..problem.tasks.len()).filter(|&i| problem.tasks[i].relaxable()).collect();

    let mut lifted = problem.clone();
    for &i in &relaxable {
        lifted.tasks[i].latest_end = f64::INFINITY;
    }
    let stn = Stn::from_problem(&lifted);
    stn.check().map_err(HardInfeasible::Temporal)?;
    let bounds = stn.bounds(lifted.tasks.len());

    let mut steps = vec![0u64; problem.tasks.len()];
    for &i in &relaxable {
        let t = &problem.tasks[i];
        let finish = bounds.earliest_start[i] + t.duration;
        steps[i] = ceil_steps(finish - t.latest_end, step);
    }
    let lower: u64 = steps.iter().sum();
    let cap_steps = (settings.max_slip / step + 1e-9).floor() as u64;
    if lower > cap_steps {
        return Err(HardInfeasible::SlipCap { required: lower as f64 * step, max_slip: settings.max_slip });
    }

    let attempt = |steps: &[u64]| -> Option<Schedule> {
        let deadlines: Vec<Seconds> =
            problem.tasks.iter().zip(steps).map(|(t, &k)| t.latest_end + k as f64 * step).collect();
        schedule_with_budget(&problem.with_deadlines(&deadlines), settings.search_budget).ok()
    };
    if let Some(s) = attempt(&steps) {
        return Ok(finish(problem, s, &steps, step));
    }

    let mut tried = 0usize;
    let mut extra = 1u64;
    'outer: while !relaxable.is_empty() && lower + extra <= cap_steps {
        let mut combo = vec![0usize; extra as usize];
        loop {
            tried += 1;
            if tried > settings.distribution_budget {
                break 'outer;
            }
            let mut candidate = steps.clone();
            for &c in &combo {
                candidate[relaxable[c]] += 1;
            }
            if let Some(s) = attempt(&candidate) {
                return Ok(finish(problem, s, &candidate, step));
            }
            if !next_multiset(&mut combo, relaxable.len()) {
                break;
            }
        }
        extra += 1;
    }

    // Lift the relaxable deadlines and charge whatever overshoot remains.
    let s = match schedule_with_budget(&lifted, settings.search_budget) {
        Ok(s) => s,
        Err(Infeasible::Temporal(w)) => return Err(HardInfeasible::Temporal(w)),
        Err(_) => return Err(HardInfeasible::Exhausted { max_slip: settings.max_slip }),
    };
    for &i in &relaxable {
        let t = &problem.tasks[i];
        let end = s.entries[&t.id].end;
        steps[i] = steps[i].max(ceil_steps(end - t.latest_end, step));
    }
    let total: u64 = steps.iter().sum();
    if total > cap_steps {
        return Err(HardInfeasible::SlipCap { required: total as f64 * step, max_slip: settings.max_slip });
    }
    Ok(finish(problem, s, &steps, step))
}

/// Advance a nondecreasing index sequence over `0..n` to its successor.
fn next_multiset(combo: &mut [usize], n: usize) -> bool {
    if n == 0 {
        return false;
    }
    let mut i = combo.len();
    while i > 0 {
        i -= 1;
        if combo[i] + 1 < n {
            let v = combo[i] + 1;
            for c in &mut combo[i..] {
                *c = v;
            }
            return true;
        }
    }
    false
}

fn finish(problem: &PlanningProblem, mut schedule: Schedule, steps: &[u64], step: Seconds) -> (Schedule, RelaxationReport) {
    let relaxed_tasks: Vec<RelaxedTask> = problem
        .tasks
        .iter()
        .zip(steps)
        .filter(|(_, &k)| k > 0)
        .map(|(t, &k)| RelaxedTask {
            task: t.id.clone(),
            original_latest_end: t.latest_end,
            relaxed_latest_end: t.latest_end + k as f64 * step,
        })
        .collect();
    let total_slip = steps.iter().sum::<u64>() as f64 * step;
    let report = RelaxationReport { operator_notified: !relaxed_tasks.is_empty(), relaxed_tasks, total_slip };
    schedule.relaxation = Some(report.clone());
    (schedule, report)
}
