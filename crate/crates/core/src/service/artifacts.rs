use serde::{Deserialize, Serialize};

use crate::model::{RobotId, Seconds};
use crate::sim::Detection;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactStatus {
    Unreviewed,
    Accepted,
    Rejected,
    Submitted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactReport {
    pub id: String,
    pub detection: String,
    pub robot: RobotId,
    pub class: String,
    pub confidence: f64,
    pub position: [f64; 3],
    pub status: ArtifactStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjusted_position: Option<[f64; 3]>,
    /// Seconds spent in review so far.
    pub reviewed_in: Seconds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub review_opened_at: Option<Seconds>,
    /// Confidence reached the flagging threshold.
    pub flagged: bool,
    pub reported_at: Seconds,
    /// Scoring result, known once submitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct: Option<bool>,
}

impl ArtifactReport {
    pub fn from_detection(d: &Detection, flag_threshold: f64) -> Self {
        Self {
            id: format!("art-{}", d.id.trim_start_matches("det-")),
            detection: d.id.clone(),
            robot: d.robot.clone(),
            class: d.class.clone(),
            confidence: d.confidence,
            position: d.position,
            status: ArtifactStatus::Unreviewed,
            adjusted_position: None,
            reviewed_in: 0.0,
            review_opened_at: None,
            flagged: d.confidence >= flag_threshold,
            reported_at: d.at,
            correct: None,
        }
    }

    /// Position that would be submitted.
    pub fn effective_position(&self) -> [f64; 3] {
        self.adjusted_position.unwrap_or(self.position)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum ReviewAction {
    Open,
    Accept,
    Reject,
    Adjust { dx: f64, dy: f64, dz: f64 },
    Submit,
}
