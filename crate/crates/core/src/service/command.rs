use serde::{Deserialize, Serialize};

use super::artifacts::ReviewAction;
use crate::executor::GateDecision;
use crate::model::{InstanceId, RobotId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OperatorCommand {
    GateDecision {
        request: String,
        decision: GateDecision,
    },
    Retry {
        task: InstanceId,
    },
    Reset {
        task: InstanceId,
        #[serde(default)]
        cascade: bool,
    },
    Waypoint {
        robot: RobotId,
        node: usize,
    },
    CommsNodeDrop {
        robot: RobotId,
        node: usize,
    },
    ArtifactReview {
        artifact: String,
        #[serde(flatten)]
        action: ReviewAction,
    },
    ArtifactSubmit {
        artifact: String,
    },
    StartMission,
    SelectRobots {
        robots: Vec<RobotId>,
    },
}

impl OperatorCommand {
    pub fn name(&self) -> &'static str {
        match self {
            OperatorCommand::GateDecision { .. } => "gate-decision",
            OperatorCommand::Retry { .. } => "retry",
            OperatorCommand::Reset { .. } => "reset",
            OperatorCommand::Waypoint { .. } => "waypoint",
            OperatorCommand::CommsNodeDrop { .. } => "comms-node-drop",
            OperatorCommand::ArtifactReview { .. } => "artifact-review",
            OperatorCommand::ArtifactSubmit { .. } => "artifact-submit",
            OperatorCommand::StartMission => "start-mission",
            OperatorCommand::SelectRobots { .. } => "select-robots",
        }
    }
}
