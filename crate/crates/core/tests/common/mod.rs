//! Independent oracles shared by the integration tests.
//!
//! Nothing here calls into the solver. Feasibility is decided by brute
//! force over a grid of start times, which is exact whenever every time in
//! the instance is a multiple of the grid.

#![allow(dead_code)]

use copilot_core::model::{Gate, InstanceId, Phase, Resource, ResourceLimits, Task, TaskDef, TaskGraph};
use copilot_core::planner::{PlanTask, PlanningProblem};
use rand::Rng;

/// Random instance with at most `max_tasks` tasks and integer data in `0..=20`.
pub fn random_instance(rng: &mut impl Rng, max_tasks: usize) -> PlanningProblem {
    let n = rng.random_range(1..=max_tasks);
    // Half the instances stress the shared resources.
    let contended = rng.random_bool(0.5);
    let now = if rng.random_bool(0.2) { rng.random_range(0..=4) as f64 } else { 0.0 };
    let mut tasks = Vec::with_capacity(n);
    for i in 0..n {
        let duration = rng.random_range(1..=6);
        let es = rng.random_range(0..=10);
        // Mostly windows that fit the task on their own, so that the
        // interesting conflicts come from precedence and shared resources.
        let le = if es + duration <= 20 && rng.random_bool(0.85) {
            rng.random_range(es + duration..=20)
        } else {
            rng.random_range(es + 1..=20)
        };
        let mut t = PlanTask::new(&format!("t{i}"), duration as f64, (es as f64, le as f64));
        t = match rng.random_range(if contended { 4 } else { 0 }..20) {
            0..=5 => t,
            6..=14 => t.with_resource(Resource::Operator),
            _ => t.with_resource(Resource::PitCrew),
        };
        if !contended && rng.random_bool(0.08) {
            t = t.frozen(rng.random_range(0..=6) as f64);
        }
        tasks.push(t);
    }
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(if contended { 0.1 } else { 0.25 }) {
                edges.push((a, b));
            }
        }
    }
    let limits = ResourceLimits { operator_capacity: 1, pit_crew_capacity: rng.random_range(1..=2) };
    PlanningProblem::new(tasks, edges, now, limits)
}

/// Exhaustive feasibility check on the grid `k * grid`.
///
/// With `resources` false only windows, durations and precedence are
/// checked. Edges must point from lower to higher task index.
pub fn brute_force_feasible(problem: &PlanningProblem, grid: f64, resources: bool) -> bool {
    brute_force_starts(problem, grid, resources).is_some()
}

/// First grid assignment of start times that satisfies every constraint.
pub fn brute_force_starts(problem: &PlanningProblem, grid: f64, resources: bool) -> Option<Vec<f64>> {
    assert!(problem.edges.iter().all(|&(a, b)| a < b), "oracle needs index-ordered edges");
    let units = |x: f64| -> i64 {
        let u = x / grid;
        assert!((u - u.round()).abs() < 1e-9, "{x} is not on the {grid} grid");
        u.round() as i64
    };
    let n = problem.tasks.len();
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    let mut dur = Vec::with_capacity(n);
    for t in &problem.tasks {
        let d = units(t.duration);
        let (a, b) = match t.frozen_start {
            Some(f) => (units(f), units(f)),
            None => (units(t.earliest_start.max(problem.now)), i64::MAX / 4),
        };
        let b = if t.latest_end.is_finite() { b.min(units(t.latest_end) - d) } else { b };
        lo.push(a);
        hi.push(b);
        dur.push(d);
    }
    // Unbounded tasks never need to start later than everything else finishes.
    let horizon = lo.iter().copied().max().unwrap_or(0) + dur.iter().sum::<i64>();
    for h in hi.iter_mut() {
        *h = (*h).min(horizon);
    }
    let mut preds = vec![Vec::new(); n];
    for &(a, b) in &problem.edges {
        preds[b].push(a);
    }
    let cap = |r: Resource| problem.limits.capacity(r) as i64;
    let slots = (horizon + 1).max(0) as usize + 1;
    let mut usage = vec![vec![0i64; slots]; 2];
    let mut starts = vec![0i64; n];
    // Running tasks are facts: they occupy capacity but are never checked
    // against it, only the tasks still to be placed are.
    let mut res: Vec<Option<usize>> = Vec::with_capacity(n);
    for (i, t) in problem.tasks.iter().enumerate() {
        let r = if resources { t.resource.map(|r| r as usize) } else { None };
        match (r, t.frozen_start) {
            (Some(r), Some(_)) => {
                for k in lo[i].max(0)..(lo[i] + dur[i]).max(0) {
                    if let Some(u) = usage[r].get_mut(k as usize) {
                        *u += 1;
                    }
                }
                res.push(None);
            }
            _ => res.push(r),
        }
    }
    let caps = [cap(Resource::Operator), cap(Resource::PitCrew)];

    #[allow(clippy::too_many_arguments)]
    fn go(
        i: usize,
        lo: &[i64],
        hi: &[i64],
        dur: &[i64],
        preds: &[Vec<usize>],
        res: &[Option<usize>],
        caps: &[i64; 2],
        usage: &mut [Vec<i64>],
        starts: &mut [i64],
    ) -> bool {
        if i == lo.len() {
            return true;
        }
        let earliest = preds[i].iter().map(|&p| starts[p] + dur[p]).fold(lo[i], i64::max);
        for s in earliest..=hi[i] {
            if s < 0 {
                continue;
            }
            if let Some(r) = res[i] {
                let span = s as usize..(s + dur[i]) as usize;
                if span.end > usage[r].len() || span.clone().any(|k| usage[r][k] >= caps[r]) {
                    continue;
                }
                span.clone().for_each(|k| usage[r][k] += 1);
                starts[i] = s;
                let ok = go(i + 1, lo, hi, dur, preds, res, caps, usage, starts);
                span.for_each(|k| usage[r][k] -= 1);
                if ok {
                    return true;
                }
            } else {
                starts[i] = s;
                if go(i + 1, lo, hi, dur, preds, res, caps, usage, starts) {
                    return true;
                }
            }
        }
        false
    }

    if lo.iter().zip(&hi).any(|(a, b)| a > b) {
        return None;
    }
    go(0, &lo, &hi, &dur, &preds, &res, &caps, &mut usage, &mut starts)
        .then(|| starts.iter().map(|&s| s as f64 * grid).collect())
}

/// Smallest number of `step`-sized deadline extensions over the relaxable
/// tasks that makes the instance feasible, searching up to `max_steps`.
pub fn minimal_relaxation_steps(problem: &PlanningProblem, step: f64, grid: f64, max_steps: u64) -> Option<u64> {
    let relaxable: Vec<usize> = (0..problem.tasks.len()).filter(|&i| problem.tasks[i].relaxable()).collect();
    (0..=max_steps).find(|&k| relaxation_with_total_exists(problem, &relaxable, k, step, grid))
}

/// Whether some split of exactly `total` steps over `relaxable` admits a schedule.
pub fn relaxation_with_total_exists(
    problem: &PlanningProblem,
    relaxable: &[usize],
    total: u64,
    step: f64,
    grid: f64,
) -> bool {
    let mut split = vec![0u64; relaxable.len()];
    compositions(total, &mut split, 0, &mut |split| {
        let mut p = problem.clone();
        for (&i, &k) in relaxable.iter().zip(split) {
            p.tasks[i].latest_end += k as f64 * step;
        }
        brute_force_feasible(&p, grid, true)
    })
}

fn compositions(left: u64, split: &mut [u64], at: usize, f: &mut dyn FnMut(&[u64]) -> bool) -> bool {
    if split.is_empty() {
        return left == 0 && f(split);
    }
    if at == split.len() - 1 {
        split[at] = left;
        return f(split);
    }
    for k in 0..=left {
        split[at] = k;
        if compositions(left - k, split, at + 1, f) {
            return true;
        }
    }
    false
}

/// Scripted relaxation instance: a short chain or fan of setup tasks on a
/// 30 s grid whose deadlines are too tight for the shared operator.
pub fn infeasible_relaxation_instance(rng: &mut impl Rng) -> TaskGraph {
    loop {
        let n = rng.random_range(2..=4);
        let mut tasks = Vec::new();
        for i in 0..n {
            let duration = 30.0 * rng.random_range(1..=4) as f64;
            let es = 30.0 * rng.random_range(0..=3) as f64;
            let le = es + duration + 30.0 * rng.random_range(0..=3) as f64;
            let gate = if rng.random_bool(0.7) { Gate::PreOperator } else { Gate::None };
            let phase = if rng.random_bool(0.85) { Phase::Setup } else { Phase::Exploration };
            let def = TaskDef::new(&format!("t{i}"), duration, (es, le), phase).with_gate(gate);
            tasks.push(Task::new(InstanceId::base(&format!("t{i}")), def, None));
        }
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.random_bool(0.3) {
                    edges.push((tasks[a].instance_id.clone(), tasks[b].instance_id.clone()));
                }
            }
        }
        let graph = TaskGraph::from_parts(tasks, edges);
        let problem = PlanningProblem::from_graph(&graph, 0.0, ResourceLimits::default());
        if !brute_force_feasible(&problem, 30.0, true) && minimal_relaxation_steps(&problem, 60.0, 30.0, 8).is_some() {
            return graph;
        }
    }
}
