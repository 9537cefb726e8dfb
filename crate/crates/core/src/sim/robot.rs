use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::RobotId;

/// Health sensors by group. Every robot reports all thirty.
pub const SENSOR_GROUPS: [(&str, [&str; 6]); 5] = [
    ("power", ["battery_voltage", "battery_temp", "power_board", "estop_circuit", "motor_current", "charger_contact"]),
    ("compute", ["main_cpu", "gpu", "cpu_temp", "disk_space", "memory", "time_sync"]),
    ("perception", ["front_lidar", "rear_lidar", "front_camera", "rear_camera", "thermal_camera", "imu"]),
    ("mobility", ["drive_left", "drive_right", "odometry", "wheel_encoders", "brakes", "gait_controller"]),
    ("comms", ["mesh_radio", "wifi", "uwb_beacon", "antenna_mast", "node_dropper", "base_link"]),
];

/// Sensors whose failure alone makes a robot critical.
const VITAL_SENSORS: [&str; 5] = ["estop_circuit", "main_cpu", "front_lidar", "imu", "odometry"];

pub fn sensor_names() -> impl Iterator<Item = &'static str> {
    SENSOR_GROUPS.iter().flat_map(|(_, names)| names.iter().copied())
}

pub fn sensor_group(sensor: &str) -> Option<&'static str> {
    SENSOR_GROUPS.iter().find(|(_, names)| names.contains(&sensor)).map(|(g, _)| *g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorStatus {
    Ok,
    Warn,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comms {
    Connected,
    Disconnected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    Idle,
    Setup,
    Exploring,
    DroppingCommsNode,
    Stuck,
    Fallen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criticality {
    Nominal,
    Caution,
    Critical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub id: RobotId,
    pub pose: [f64; 2],
    pub in_course: bool,
    pub comms: Comms,
    pub behavior: Behavior,
    pub battery: f64,
    pub sensors: BTreeMap<String, SensorStatus>,
    pub criticality: Criticality,
}

impl RobotState {
    pub fn new(id: RobotId, pose: [f64; 2]) -> Self {
        let sensors = sensor_names().map(|s| (s.to_string(), SensorStatus::Ok)).collect();
        let mut state = Self {
            id,
            pose,
            in_course: false,
            comms: Comms::Connected,
            behavior: Behavior::Idle,
            battery: 100.0,
            sensors,
            criticality: Criticality::Nominal,
        };
        state.refresh_criticality();
        state
    }

    pub fn refresh_criticality(&mut self) {
        self.criticality = criticality(self);
    }

    pub fn failed_sensors(&self) -> impl Iterator<Item = &str> {
        self.sensors.iter().filter(|(_, s)| **s == SensorStatus::Fail).map(|(n, _)| n.as_str())
    }
}

/// Worst condition over behavior, battery, comms and sensors.
///
/// | condition                         | level    |
/// |-----------------------------------|----------|
/// | fallen                            | critical |
/// | battery below 15 %                | critical |
/// | vital sensor failed               | critical |
/// | stuck                             | caution  |
/// | battery below 30 %                | caution  |
/// | other sensor failed, any warning  | caution  |
/// | comms disconnected                | caution  |
pub fn criticality(state: &RobotState) -> Criticality {
    let mut level = Criticality::Nominal;
    let mut raise = |c: Criticality| level = level.max(c);
    match state.behavior {
        Behavior::Fallen => raise(Criticality::Critical),
        Behavior::Stuck => raise(Criticality::Caution),
        _ => {}
    }
    if state.battery < 15.0 {
        raise(Criticality::Critical);
    } else if state.battery < 30.0 {
        raise(Criticality::Caution);
    }
    if state.comms == Comms::Disconnected {
        raise(Criticality::Caution);
    }
    for (name, status) in &state.sensors {
        match status {
            SensorStatus::Fail if VITAL_SENSORS.contains(&name.as_str()) => raise(Criticality::Critical),
            SensorStatus::Fail | SensorStatus::Warn => raise(Criticality::Caution),
            SensorStatus::Ok => {}
        }
    }
    level
}
