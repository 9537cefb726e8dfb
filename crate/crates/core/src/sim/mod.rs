//! Discrete-time simulation of the robot fleet.
//!
//! The [`Fleet`] owns robot state, scripted faults and comms outages,
//! artifact detections and ground truth, and implements
//! [`TaskActions`](crate::executor::TaskActions) so the executor can drive
//! simulated robots. All randomness comes from seeded ChaCha streams, so a
//! run is a pure function of the scenario and the robot list.

mod config;
mod course;
mod detect;
mod fleet;
mod robot;

pub use config::{
    CommsChange, ConfidenceDistribution, FaultKind, GroundTruthArtifact, OperatorProfile, Scenario, ScenarioError,
    ScriptedFault, SimConfig,
};
pub use course::{dist, Roadmap, STAGING};
pub use detect::{
    emit_detections, flagged_count, generate_ground_truth, sample_confidence, Detection, DetectionContext,
    ARTIFACT_CLASSES,
};
pub use fleet::{Fleet, RobotCommand, SimError, SimEvent, SCORING_RADIUS};
pub use robot::{
    criticality, sensor_group, sensor_names, Behavior, Comms, Criticality, RobotState, SensorStatus, SENSOR_GROUPS,
};
