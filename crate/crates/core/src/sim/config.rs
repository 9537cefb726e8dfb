use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{RobotId, Seconds};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultKind {
    SensorFail,
    Fallen,
    BatteryLow,
    TaskPostFail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedFault {
    pub at: Seconds,
    pub robot: RobotId,
    pub fault: FaultKind,
    /// Sensor to fail; defaults to `front_lidar`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensor: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommsChange {
    pub at: Seconds,
    pub robot: RobotId,
    pub connected: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConfidenceDistribution {
    Uniform { low: f64, high: f64 },
    Beta { alpha: f64, beta: f64 },
}

impl Default for ConfidenceDistribution {
    fn default() -> Self {
        ConfidenceDistribution::Uniform { low: 0.0, high: 1.0 }
    }
}

fn default_time_scale() -> f64 {
    10.0
}

fn default_detection_rate() -> f64 {
    0.5
}

fn default_speed() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Simulated seconds per wall-clock second.
    #[serde(default = "default_time_scale")]
    pub time_scale: f64,
    pub seed: u64,
    #[serde(default)]
    pub failure_script: Vec<ScriptedFault>,
    #[serde(default)]
    pub comms_script: Vec<CommsChange>,
    /// Detections per exploring robot per minute.
    #[serde(default = "default_detection_rate")]
    pub detection_rate: f64,
    #[serde(default)]
    pub confidence_distribution: ConfidenceDistribution,
    /// Relative spread of actual task durations around nominal; 0 runs exactly nominal.
    #[serde(default)]
    pub duration_jitter: f64,
    /// Exploration speed in metres per second.
    #[serde(default = "default_speed")]
    pub robot_speed: f64,
}

impl SimConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            time_scale: default_time_scale(),
            seed,
            failure_script: Vec::new(),
            comms_script: Vec::new(),
            detection_rate: default_detection_rate(),
            confidence_distribution: ConfidenceDistribution::default(),
            duration_jitter: 0.0,
            robot_speed: default_speed(),
        }
    }
}

/// Behaviour of the scripted stand-in operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OperatorProfile {
    /// Seconds from a gate opening to the operator's decision.
    pub gate_latency: Seconds,
    /// Seconds spent reviewing one artifact report.
    pub review_time: Seconds,
    /// Reports at or above this confidence are flagged for review.
    pub flag_threshold: f64,
    pub submit_accepted: bool,
    /// Cursor sampling rate in Hz; 0 disables UI telemetry.
    pub cursor_rate: f64,
    /// Robots selected at the launch gate; empty selects the whole fleet.
    pub select: Vec<RobotId>,
    /// Gates answered no-go, by task instance id.
    pub no_go: Vec<String>,
}

impl Default for OperatorProfile {
    fn default() -> Self {
        Self {
            gate_latency: 0.0,
            review_time: 15.0,
            flag_threshold: 0.4,
            submit_accepted: true,
            cursor_rate: 1.5,
            select: Vec::new(),
            no_go: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthArtifact {
    pub id: String,
    pub class: String,
    pub position: [f64; 3],
}

fn default_budget() -> u32 {
    20
}

fn default_generated() -> usize {
    20
}

fn default_tick() -> Seconds {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    /// Fleet used when no robot list is given on the command line.
    #[serde(default)]
    pub robots: Vec<RobotId>,
    /// `default`, `baseline`, or a template file path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<String>,
    pub sim: SimConfig,
    #[serde(default)]
    pub operator: OperatorProfile,
    #[serde(default = "default_budget")]
    pub submission_budget: u32,
    /// Ground truth; generated from the seed when empty.
    #[serde(default)]
    pub artifacts: Vec<GroundTruthArtifact>,
    #[serde(default = "default_generated")]
    pub generated_artifacts: usize,
    /// Mission length; defaults to the end of the exploration window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<Seconds>,
    #[serde(default = "default_tick")]
    pub tick: Seconds,
}

impl Scenario {
    pub fn new(name: &str, robots: Vec<RobotId>, sim: SimConfig) -> Self {
        Self {
            name: name.to_string(),
            robots,
            template: None,
            sim,
            operator: OperatorProfile::default(),
            submission_budget: default_budget(),
            artifacts: Vec::new(),
            generated_artifacts: default_generated(),
            duration: None,
            tick: default_tick(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: &str| Err(ScenarioError::Invalid(m.to_string()));
        if !(self.tick > 0.0) {
            return bad("tick must be positive");
        }
        if !(self.sim.time_scale > 0.0) {
            return bad("time_scale must be positive");
        }
        if self.sim.detection_rate < 0.0 {
            return bad("detection_rate must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.operator.flag_threshold) {
            return bad("flag_threshold must lie in [0, 1]");
        }
        match self.sim.confidence_distribution {
            ConfidenceDistribution::Uniform { low, high } if !(0.0 <= low && low < high && high <= 1.0) => {
                bad("uniform confidence bounds must satisfy 0 <= low < high <= 1")
            }
            ConfidenceDistribution::Beta { alpha, beta } if !(alpha > 0.0 && beta > 0.0) => {
                bad("beta parameters must be positive")
            }
            _ => Ok(()),
        }
    }
}
