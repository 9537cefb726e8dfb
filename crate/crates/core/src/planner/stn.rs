//! Simple temporal network over task start/end events.
//!
//! Every constraint is a difference `v - u <= w`, stored as an edge `u -> v`
//! with weight `w` in the distance graph. The network is consistent iff the
//! distance graph has no negative cycle.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::PlanningProblem;
use crate::model::{InstanceId, Seconds};

const EPS: f64 = 1e-9;

/// Origin node; fixed at mission time zero.
pub const ORIGIN: usize = 0;

/// Constraint that produced an edge, cited in infeasibility witnesses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "constraint", rename_all = "snake_case")]
pub enum Constraint {
    Duration { task: InstanceId, duration: Seconds },
    Release { task: InstanceId, earliest_start: Seconds },
    Deadline { task: InstanceId, latest_end: Seconds },
    Precedence { pred: InstanceId, succ: InstanceId },
    Frozen { task: InstanceId, start: Seconds },
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Duration { task, duration } => write!(f, "duration({task}) = {duration}"),
            Constraint::Release { task, earliest_start } => write!(f, "start({task}) >= {earliest_start}"),
            Constraint::Deadline { task, latest_end } => write!(f, "end({task}) <= {latest_end}"),
            Constraint::Precedence { pred, succ } => write!(f, "end({pred}) <= start({succ})"),
            Constraint::Frozen { task, start } => write!(f, "start({task}) = {start} (running)"),
        }
    }
}

/// A negative cycle in the distance graph: the constraints cannot hold together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub chain: Vec<Constraint>,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.chain.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join(" & "))
    }
}

#[derive(Debug, Clone)]
struct Edge {
    from: usize,
    to: usize,
    weight: f64,
    label: usize,
}

#[derive(Debug, Clone)]
pub struct Stn {
    nodes: usize,
    edges: Vec<Edge>,
    labels: Vec<Constraint>,
}

/// Time bounds of every task implied by the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub earliest_start: Vec<Seconds>,
    pub latest_start: Vec<Seconds>,
}

pub fn start_node(task: usize) -> usize {
    1 + 2 * task
}

pub fn end_node(task: usize) -> usize {
    2 + 2 * task
}

impl Stn {
    /// Temporal constraints of `problem`, ignoring resource capacities.
    pub fn from_problem(problem: &PlanningProblem) -> Self {
        let mut stn = Stn { nodes: 1 + 2 * problem.tasks.len(), edges: Vec::new(), labels: Vec::new() };
        for (i, t) in problem.tasks.iter().enumerate() {
            let (s, e) = (start_node(i), end_node(i));
            let dur = stn.label(Constraint::Duration { task: t.id.clone(), duration: t.duration });
            stn.edge(s, e, t.duration, dur);
            stn.edge(e, s, -t.duration, dur);
            match t.frozen_start {
                Some(start) => {
                    let l = stn.label(Constraint::Frozen { task: t.id.clone(), start });
                    stn.edge(s, ORIGIN, -start, l);
                    stn.edge(ORIGIN, s, start, l);
                }
                None => {
                    let release = t.release(problem.now);
                    let l = stn.label(Constraint::Release { task: t.id.clone(), earliest_start: release });
                    stn.edge(s, ORIGIN, -release, l);
                }
            }
            if t.latest_end.is_finite() {
                let l = stn.label(Constraint::Deadline { task: t.id.clone(), latest_end: t.latest_end });
                stn.edge(ORIGIN, e, t.latest_end, l);
            }
        }
        for &(a, b) in &problem.edges {
            let l = stn.label(Constraint::Precedence {
                pred: problem.tasks[a].id.clone(),
                succ: problem.tasks[b].id.clone(),
            });
            // end(a) - start(b) <= 0
            stn.edge(start_node(b), end_node(a), 0.0, l);
        }
        stn
    }

    fn label(&mut self, c: Constraint) -> usize {
        self.labels.push(c);
        self.labels.len() - 1
    }

    fn edge(&mut self, from: usize, to: usize, weight: f64, label: usize) {
        self.edges.push(Edge { from, to, weight, label });
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    /// `Ok(())` iff consistent; otherwise the constraints along one negative cycle.
    pub fn check(&self) -> Result<(), Witness> {
        // Bellman-Ford from a virtual source connected to every node with weight 0.
        let n = self.nodes;
        let mut dist = vec![0.0f64; n];
        let mut pred: Vec<Option<usize>> = vec![None; n];
        let mut last_relaxed = None;
        for _ in 0..n {
            last_relaxed = None;
            for (k, e) in self.edges.iter().enumerate() {
                let cand = dist[e.from] + e.weight;
                if cand < dist[e.to] - EPS {
                    dist[e.to] = cand;
                    pred[e.to] = Some(k);
                    last_relaxed = Some(e.to);
                }
            }
            if last_relaxed.is_none() {
                return Ok(());
            }
        }
        let Some(mut v) = last_relaxed else { return Ok(()) };
        for _ in 0..n {
            v = self.edges[pred[v].expect("relaxed node has predecessor")].from;
        }
        let start = v;
        let mut chain = Vec::new();
        loop {
            let e = &self.edges[pred[v].expect("cycle node has predecessor")];
            let c = self.labels[e.label].clone();
            if chain.last() != Some(&c) {
                chain.push(c);
            }
            v = e.from;
            if v == start {
                break;
            }
        }
        chain.reverse();
        if chain.len() > 1 && chain.first() == chain.last() {
            chain.pop();
        }
        Err(Witness { chain })
    }

    /// Shortest distances from `source` along edges (or reversed edges).
    fn distances(&self, source: usize, reversed: bool) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.nodes];
        dist[source] = 0.0;
        for _ in 0..self.nodes {
            let mut changed = false;
            for e in &self.edges {
                let (u, v) = if reversed { (e.to, e.from) } else { (e.from, e.to) };
                if dist[u].is_finite() && dist[u] + e.weight < dist[v] - EPS {
                    dist[v] = dist[u] + e.weight;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        dist
    }

    /// Earliest and latest start per task. Only meaningful for a consistent network.
    pub fn bounds(&self, tasks: usize) -> Bounds {
        let from_origin = self.distances(ORIGIN, false);
        let to_origin = self.distances(ORIGIN, true);
        let mut earliest_start = Vec::with_capacity(tasks);
        let mut latest_start = Vec::with_capacity(tasks);
        for i in 0..tasks {
            let s = start_node(i);
            earliest_start.push(-to_origin[s]);
            latest_start.push(from_origin[s]);
        }
        Bounds { earliest_start, latest_start }
    }
}

/// Temporal feasibility of `problem` with every unstarted task starting no earlier than `now`.
pub fn check_consistency(problem: &PlanningProblem) -> Result<(), Witness> {
    Stn::from_problem(problem).check()
}
