use rand::Rng;
use rand_distr::{Beta, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::config::{ConfidenceDistribution, GroundTruthArtifact};
use super::course::{dist, Roadmap};
use crate::model::{RobotId, Seconds};

pub const ARTIFACT_CLASSES: [&str; 8] =
    ["survivor", "backpack", "cell_phone", "drill", "fire_extinguisher", "gas", "vent", "helmet"];

/// Ground truth within this range of the robot can produce a true detection.
const SENSING_RANGE: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub id: String,
    pub robot: RobotId,
    pub class: String,
    pub confidence: f64,
    pub position: [f64; 3],
    pub at: Seconds,
    /// Ground-truth artifact this detection stems from, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<String>,
}

pub fn sample_confidence(dist: &ConfidenceDistribution, rng: &mut impl Rng) -> f64 {
    match *dist {
        ConfidenceDistribution::Uniform { low, high } => rng.random_range(low..high),
        ConfidenceDistribution::Beta { alpha, beta } => {
            Beta::new(alpha, beta).expect("validated beta parameters").sample(rng)
        }
    }
}

/// Number of reports whose confidence reaches `threshold`.
pub fn flagged_count(detections: &[Detection], threshold: f64) -> usize {
    detections.iter().filter(|d| d.confidence >= threshold).count()
}

/// Ground truth scattered near the roadmap.
pub fn generate_ground_truth(roadmap: &Roadmap, count: usize, rng: &mut impl Rng) -> Vec<GroundTruthArtifact> {
    (0..count)
        .map(|i| {
            let node = roadmap.nodes[rng.random_range(1..roadmap.nodes.len())];
            let p = roadmap.clamp([node[0] + rng.random_range(-6.0..6.0), node[1] + rng.random_range(-6.0..6.0)]);
            GroundTruthArtifact {
                id: format!("truth-{i:02}"),
                class: ARTIFACT_CLASSES[rng.random_range(0..ARTIFACT_CLASSES.len())].to_string(),
                position: [p[0], p[1], rng.random_range(0.0..2.0)],
            }
        })
        .collect()
}

/// Detection source for one robot over `(from, to]`.
pub struct DetectionContext<'a> {
    pub robot: &'a RobotId,
    pub pose: [f64; 2],
    pub rate_per_minute: f64,
    pub confidence: &'a ConfidenceDistribution,
    pub truth: &'a [GroundTruthArtifact],
    pub roadmap: &'a Roadmap,
}

/// Poisson arrivals at the configured rate. Each detection is a true one
/// with probability equal to its confidence when ground truth is in range,
/// otherwise a false positive near the robot.
pub fn emit_detections(
    ctx: &DetectionContext<'_>,
    from: Seconds,
    to: Seconds,
    next_id: &mut u64,
    rng: &mut impl Rng,
) -> Vec<Detection> {
    let lambda = ctx.rate_per_minute * (to - from).max(0.0) / 60.0;
    if lambda <= 0.0 {
        return Vec::new();
    }
    let n = Poisson::new(lambda).expect("positive rate").sample(rng) as usize;
    let mut times: Vec<Seconds> = (0..n).map(|_| rng.random_range(from..to)).collect();
    times.sort_by(f64::total_cmp);
    let nearest = ctx
        .truth
        .iter()
        .filter(|t| dist([t.position[0], t.position[1]], ctx.pose) <= SENSING_RANGE)
        .min_by(|a, b| {
            dist([a.position[0], a.position[1]], ctx.pose).total_cmp(&dist([b.position[0], b.position[1]], ctx.pose))
        });
    times
        .into_iter()
        .map(|at| {
            let confidence = sample_confidence(ctx.confidence, rng);
            let real = nearest.filter(|_| rng.random_bool(confidence.clamp(0.0, 1.0)));
            let (class, position, truth) = match real {
                Some(t) => {
                    let p = ctx.roadmap.clamp([
                        t.position[0] + rng.random_range(-2.0..2.0),
                        t.position[1] + rng.random_range(-2.0..2.0),
                    ]);
                    (t.class.clone(), [p[0], p[1], t.position[2]], Some(t.id.clone()))
                }
                None => {
                    let r = rng.random_range(5.0..15.0);
                    let a = rng.random_range(0.0..std::f64::consts::TAU);
                    let p = ctx.roadmap.clamp([ctx.pose[0] + r * a.cos(), ctx.pose[1] + r * a.sin()]);
                    let class = ARTIFACT_CLASSES[rng.random_range(0..ARTIFACT_CLASSES.len())].to_string();
                    (class, [p[0], p[1], rng.random_range(0.0..2.0)], None)
                }
            };
            let id = format!("det-{:05}", *next_id);
            *next_id += 1;
            Detection { id, robot: ctx.robot.clone(), class, confidence, position, at, truth }
        })
        .collect()
}
