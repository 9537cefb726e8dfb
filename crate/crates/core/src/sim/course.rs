use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

/// Staging area outside the course where robots are prepared.
pub const STAGING: [f64; 2] = [-30.0, 0.0];

/// Breadcrumb roadmap of the course: a main corridor with side galleries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roadmap {
    pub nodes: Vec<[f64; 2]>,
    pub adjacency: Vec<Vec<usize>>,
    /// `[x_min, y_min, x_max, y_max]`
    pub bounds: [f64; 4],
}

impl Default for Roadmap {
    fn default() -> Self {
        Self::corridor(16, 20.0, 4)
    }
}

impl Roadmap {
    /// `trunk` nodes along the x axis with `spacing` metres between them and
    /// galleries of `gallery` nodes leaving every third trunk node, sides
    /// alternating.
    pub fn corridor(trunk: usize, spacing: f64, gallery: usize) -> Self {
        let mut nodes = Vec::new();
        let mut adjacency: Vec<Vec<usize>> = Vec::new();
        let link = |adj: &mut Vec<Vec<usize>>, a: usize, b: usize| {
            adj[a].push(b);
            adj[b].push(a);
        };
        for i in 0..trunk {
            nodes.push([i as f64 * spacing, 0.0]);
            adjacency.push(Vec::new());
            if i > 0 {
                link(&mut adjacency, i - 1, i);
            }
        }
        for (k, i) in (2..trunk).step_by(3).enumerate() {
            let side = if k % 2 == 0 { 1.0 } else { -1.0 };
            let mut prev = i;
            for j in 1..=gallery {
                nodes.push([i as f64 * spacing, side * j as f64 * spacing]);
                adjacency.push(Vec::new());
                let id = nodes.len() - 1;
                link(&mut adjacency, prev, id);
                prev = id;
            }
        }
        let margin = spacing / 2.0;
        let xs = nodes.iter().map(|n| n[0]);
        let ys = nodes.iter().map(|n| n[1]);
        let bounds = [
            xs.clone().fold(f64::INFINITY, f64::min) - margin,
            ys.clone().fold(f64::INFINITY, f64::min) - margin,
            xs.fold(f64::NEG_INFINITY, f64::max) + margin,
            ys.fold(f64::NEG_INFINITY, f64::max) + margin,
        ];
        Self { nodes, adjacency, bounds }
    }

    pub fn entrance(&self) -> usize {
        0
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.bounds[0] && p[0] <= self.bounds[2] && p[1] >= self.bounds[1] && p[1] <= self.bounds[3]
    }

    pub fn clamp(&self, p: [f64; 2]) -> [f64; 2] {
        [p[0].clamp(self.bounds[0], self.bounds[2]), p[1].clamp(self.bounds[1], self.bounds[3])]
    }

    /// Dead ends, in node order; robots fan out over these.
    pub fn leaves(&self) -> Vec<usize> {
        (1..self.nodes.len()).filter(|&n| self.adjacency[n].len() == 1).collect()
    }

    pub fn nearest(&self, p: [f64; 2]) -> usize {
        (0..self.nodes.len())
            .min_by(|&a, &b| dist(self.nodes[a], p).total_cmp(&dist(self.nodes[b], p)))
            .unwrap_or(0)
    }

    /// Node sequence from `from` to `to`, both included.
    pub fn path(&self, from: usize, to: usize) -> Vec<usize> {
        let mut prev = vec![usize::MAX; self.nodes.len()];
        let mut queue = VecDeque::from([from]);
        prev[from] = from;
        while let Some(n) = queue.pop_front() {
            if n == to {
                break;
            }
            for &m in &self.adjacency[n] {
                if prev[m] == usize::MAX {
                    prev[m] = n;
                    queue.push_back(m);
                }
            }
        }
        if prev[to] == usize::MAX {
            return vec![from];
        }
        let mut path = vec![to];
        let mut n = to;
        while n != from {
            n = prev[n];
            path.push(n);
        }
        path.reverse();
        path
    }
}

pub fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}
