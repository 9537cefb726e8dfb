use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{CommsChange, FaultKind, GroundTruthArtifact, Scenario, ScriptedFault, SimConfig};
use super::course::{dist, Roadmap, STAGING};
use super::detect::{emit_detections, generate_ground_truth, Detection, DetectionContext};
use super::robot::{Behavior, Comms, RobotState, SensorStatus};
use crate::executor::{ExecStatus, TaskActions};
use crate::model::{InstanceId, RobotId, Seconds, Task};
use crate::store::CourseEntry;

const EPS: f64 = 1e-9;
const HEALTH_PERIOD: Seconds = 5.0;
const DROP_TIME: Seconds = 10.0;
/// Correct-report radius around a ground-truth artifact, metres.
pub const SCORING_RADIUS: f64 = 5.0;

/// Robot tasks that talk to the robot over the network.
const NEEDS_COMMS: [&str; 4] = ["establish_comms", "load_mission_params", "arm_autonomy", "deploy"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("unknown robot `{0}`")]
    UnknownRobot(RobotId),
    #[error("unknown roadmap node {0}")]
    UnknownNode(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SimEvent {
    Health(RobotState),
    CourseEntry(CourseEntry),
    Detection(Detection),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RobotCommand {
    Waypoint { node: usize },
    CommsNodeDrop { node: usize },
}

#[derive(Debug, Clone)]
struct SimRobot {
    state: RobotState,
    index: usize,
    buffer: VecDeque<SimEvent>,
    commands: VecDeque<RobotCommand>,
    route: VecDeque<usize>,
    next_leaf: usize,
    drop_at: Option<usize>,
    drop_until: Option<Seconds>,
    post_failures: u32,
    entered: bool,
    dirty: bool,
}

#[derive(Debug, Clone)]
struct Action {
    robot: Option<RobotId>,
    started: Seconds,
    duration: Seconds,
}

/// Discrete-time fleet model and task action bindings.
#[derive(Debug, Clone)]
pub struct Fleet {
    config: SimConfig,
    task_rng: ChaCha8Rng,
    detect_rng: ChaCha8Rng,
    roadmap: Roadmap,
    truth: Vec<GroundTruthArtifact>,
    robots: BTreeMap<RobotId, SimRobot>,
    faults: Vec<ScriptedFault>,
    comms: Vec<CommsChange>,
    actions: BTreeMap<InstanceId, Action>,
    clock: Seconds,
    next_detection: u64,
    ready: Vec<SimEvent>,
}

impl Fleet {
    pub fn new(scenario: &Scenario, robots: &[RobotId]) -> Result<Self, SimError> {
        let config = scenario.sim.clone();
        let roadmap = Roadmap::default();
        let mut truth_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_0003);
        let truth = if scenario.artifacts.is_empty() {
            generate_ground_truth(&roadmap, scenario.generated_artifacts, &mut truth_rng)
        } else {
            scenario.artifacts.clone()
        };
        let robots: BTreeMap<RobotId, SimRobot> = robots
            .iter()
            .enumerate()
            .map(|(index, id)| {
                let pose = [STAGING[0], STAGING[1] + 3.0 * index as f64];
                let robot = SimRobot {
                    state: RobotState::new(id.clone(), pose),
                    index,
                    buffer: VecDeque::new(),
                    commands: VecDeque::new(),
                    route: VecDeque::new(),
                    next_leaf: index,
                    drop_at: None,
                    drop_until: None,
                    post_failures: 0,
                    entered: false,
                    dirty: true,
                };
                (id.clone(), robot)
            })
            .collect();
        let mut fleet = Self {
            task_rng: ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_0001),
            detect_rng: ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_0002),
            config: config.clone(),
            roadmap,
            truth,
            robots,
            faults: Vec::new(),
            comms: Vec::new(),
            actions: BTreeMap::new(),
            clock: 0.0,
            next_detection: 0,
            ready: Vec::new(),
        };
        for f in &config.failure_script {
            fleet.inject_failure(f.clone())?;
        }
        for c in &config.comms_script {
            fleet.set_comms(c.at, &c.robot, c.connected)?;
        }
        Ok(fleet)
    }

    pub fn clock(&self) -> Seconds {
        self.clock
    }

    pub fn roadmap(&self) -> &Roadmap {
        &self.roadmap
    }

    pub fn ground_truth(&self) -> &[GroundTruthArtifact] {
        &self.truth
    }

    pub fn robot(&self, id: &RobotId) -> Option<&RobotState> {
        self.robots.get(id).map(|r| &r.state)
    }

    pub fn robots(&self) -> impl Iterator<Item = &RobotState> {
        self.robots.values().map(|r| &r.state)
    }

    /// Schedule a fault. Faults fire in time order, ties in script order.
    pub fn inject_failure(&mut self, fault: ScriptedFault) -> Result<(), SimError> {
        if !self.robots.contains_key(&fault.robot) {
            return Err(SimError::UnknownRobot(fault.robot));
        }
        let pos = self.faults.partition_point(|f| f.at <= fault.at);
        self.faults.insert(pos, fault);
        Ok(())
    }

    pub fn set_comms(&mut self, at: Seconds, robot: &RobotId, connected: bool) -> Result<(), SimError> {
        if !self.robots.contains_key(robot) {
            return Err(SimError::UnknownRobot(robot.clone()));
        }
        let pos = self.comms.partition_point(|c| c.at <= at);
        self.comms.insert(pos, CommsChange { at, robot: robot.clone(), connected });
        Ok(())
    }

    /// Send a command; returns `true` if it was queued behind a comms outage.
    pub fn send_command(&mut self, robot: &RobotId, command: RobotCommand) -> Result<bool, SimError> {
        let node = match command {
            RobotCommand::Waypoint { node } | RobotCommand::CommsNodeDrop { node } => node,
        };
        if node >= self.roadmap.nodes.len() {
            return Err(SimError::UnknownNode(node));
        }
        let r = self.robots.get_mut(robot).ok_or_else(|| SimError::UnknownRobot(robot.clone()))?;
        if r.state.comms == Comms::Disconnected {
            r.commands.push_back(command);
            return Ok(true);
        }
        execute_command(r, &self.roadmap, command);
        Ok(false)
    }

    /// Would a report of `class` at `position` score?
    pub fn score(&self, class: &str, position: [f64; 3]) -> bool {
        self.truth.iter().any(|t| {
            t.class == class
                && ((t.position[0] - position[0]).powi(2)
                    + (t.position[1] - position[1]).powi(2)
                    + (t.position[2] - position[2]).powi(2))
                .sqrt()
                    <= SCORING_RADIUS
        })
    }

    fn emit(&mut self, robot: &RobotId, event: SimEvent) {
        let r = self.robots.get_mut(robot).expect("known robot");
        if r.state.comms == Comms::Connected {
            self.ready.push(event);
        } else {
            r.buffer.push_back(event);
        }
    }

    /// Events delivered to the base since the last call.
    pub fn drain(&mut self) -> Vec<SimEvent> {
        std::mem::take(&mut self.ready)
    }

    /// Advance the world by `dt` and return the events delivered meanwhile.
    pub fn step(&mut self, dt: Seconds) -> Vec<SimEvent> {
        if dt <= 0.0 {
            return self.drain();
        }
        let from = self.clock;
        let to = from + dt;
        self.clock = to;
        self.apply_comms(to);
        self.apply_faults(to);
        let ids: Vec<RobotId> = self.robots.keys().cloned().collect();
        for id in &ids {
            self.advance_robot(id, from, to);
        }
        for id in &ids {
            let r = &self.robots[id];
            let periodic = r.state.in_course && (to / HEALTH_PERIOD).floor() > (from / HEALTH_PERIOD).floor();
            if r.dirty || periodic {
                let r = self.robots.get_mut(id).expect("known robot");
                r.dirty = false;
                r.state.refresh_criticality();
                let state = r.state.clone();
                self.emit(id, SimEvent::Health(state));
            }
        }
        self.drain()
    }

    fn apply_comms(&mut self, to: Seconds) {
        let due = self.comms.partition_point(|c| c.at <= to + EPS);
        for change in self.comms.drain(..due).collect::<Vec<_>>() {
            let r = self.robots.get_mut(&change.robot).expect("validated robot");
            let state = if change.connected { Comms::Connected } else { Comms::Disconnected };
            if r.state.comms == state {
                continue;
            }
            r.state.comms = state;
            r.dirty = true;
            if change.connected {
                self.ready.extend(r.buffer.drain(..));
                while let Some(cmd) = r.commands.pop_front() {
                    execute_command(r, &self.roadmap, cmd);
                }
            }
        }
    }

    fn apply_faults(&mut self, to: Seconds) {
        let due = self.faults.partition_point(|f| f.at <= to + EPS);
        for fault in self.faults.drain(..due).collect::<Vec<_>>() {
            let r = self.robots.get_mut(&fault.robot).expect("validated robot");
            match fault.fault {
                FaultKind::SensorFail => {
                    let sensor = fault.sensor.unwrap_or_else(|| "front_lidar".to_string());
                    r.state.sensors.insert(sensor, SensorStatus::Fail);
                }
                FaultKind::Fallen => {
                    r.state.behavior = Behavior::Fallen;
                    r.route.clear();
                }
                FaultKind::BatteryLow => r.state.battery = r.state.battery.min(10.0),
                FaultKind::TaskPostFail => r.post_failures += 1,
            }
            r.dirty = true;
        }
    }

    fn advance_robot(&mut self, id: &RobotId, from: Seconds, to: Seconds) {
        let dt = to - from;
        let speed = self.config.robot_speed;
        let leaves = self.roadmap.leaves();
        let r = self.robots.get_mut(id).expect("known robot");
        let drain = match r.state.behavior {
            Behavior::Idle | Behavior::Fallen => 0.0,
            Behavior::Setup => 0.2,
            _ => 0.8,
        };
        let before = r.state.battery;
        r.state.battery = (r.state.battery - drain * dt / 60.0).max(0.0);
        if (before >= 30.0) != (r.state.battery >= 30.0) || (before >= 15.0) != (r.state.battery >= 15.0) {
            r.dirty = true;
        }
        if let Some(until) = r.drop_until {
            if to + EPS >= until {
                r.drop_until = None;
                r.state.behavior = Behavior::Exploring;
                r.dirty = true;
            }
            return;
        }
        if r.state.behavior != Behavior::Exploring {
            return;
        }
        if r.route.is_empty() && !leaves.is_empty() {
            let here = self.roadmap.nearest(r.state.pose);
            let leaf = leaves[r.next_leaf % leaves.len()];
            r.next_leaf += 1;
            r.route = self.roadmap.path(here, leaf).into_iter().collect();
        }
        let mut budget = speed * dt;
        while budget > EPS {
            let Some(&next) = r.route.front() else { break };
            let target = self.roadmap.nodes[next];
            let d = dist(r.state.pose, target);
            if d <= budget {
                r.state.pose = target;
                budget -= d;
                r.route.pop_front();
                if r.route.is_empty() && r.drop_at == Some(next) {
                    r.drop_at = None;
                    r.state.behavior = Behavior::DroppingCommsNode;
                    r.drop_until = Some(to + DROP_TIME);
                    r.dirty = true;
                    break;
                }
            } else {
                let k = budget / d;
                r.state.pose = [r.state.pose[0] + k * (target[0] - r.state.pose[0]), r.state.pose[1] + k * (target[1] - r.state.pose[1])];
                budget = 0.0;
            }
        }
        if r.state.in_course && self.config.detection_rate > 0.0 {
            let ctx = DetectionContext {
                robot: id,
                pose: r.state.pose,
                rate_per_minute: self.config.detection_rate,
                confidence: &self.config.confidence_distribution,
                truth: &self.truth,
                roadmap: &self.roadmap,
            };
            let found = emit_detections(&ctx, from, to, &mut self.next_detection, &mut self.detect_rng);
            for d in found {
                self.emit(id, SimEvent::Detection(d));
            }
        }
    }

    fn finish_effects(&mut self, task: &Task, now: Seconds) {
        let Some(id) = &task.robot else { return };
        let roadmap_entrance = self.roadmap.nodes[self.roadmap.entrance()];
        let r = self.robots.get_mut(id).expect("known robot");
        match task.def.id.as_str() {
            "stage_robot" | "power_on" if r.state.behavior == Behavior::Idle => {
                r.state.behavior = Behavior::Setup;
                r.dirty = true;
            }
            "deploy" if !r.entered => {
                r.entered = true;
                r.state.in_course = true;
                r.state.pose = roadmap_entrance;
                r.dirty = true;
                self.emit(id, SimEvent::CourseEntry(CourseEntry { robot: id.clone(), at: now }));
            }
            "start_exploration" if r.state.behavior == Behavior::Setup => {
                r.state.behavior = Behavior::Exploring;
                r.dirty = true;
            }
            _ => {}
        }
    }
}

fn execute_command(r: &mut SimRobot, roadmap: &Roadmap, command: RobotCommand) {
    let here = roadmap.nearest(r.state.pose);
    match command {
        RobotCommand::Waypoint { node } => {
            r.route = roadmap.path(here, node).into_iter().collect();
            r.drop_at = None;
        }
        RobotCommand::CommsNodeDrop { node } => {
            r.route = roadmap.path(here, node).into_iter().collect();
            r.drop_at = Some(node);
        }
    }
    // Leaf exploration resumes from the robot's own share of dead ends.
    r.next_leaf = r.next_leaf.max(r.index);
}

impl TaskActions for Fleet {
    fn precondition(&mut self, task: &Task, _now: Seconds) -> Result<(), String> {
        let Some(id) = &task.robot else { return Ok(()) };
        let r = self.robots.get(id).ok_or_else(|| format!("robot {id} is not simulated"))?;
        if r.state.behavior == Behavior::Fallen {
            return Err(format!("{id} has fallen over"));
        }
        if r.state.battery < 5.0 {
            return Err(format!("{id} battery depleted"));
        }
        if NEEDS_COMMS.contains(&task.def.id.as_str()) && r.state.comms == Comms::Disconnected {
            return Err(format!("{id} is out of comms"));
        }
        Ok(())
    }

    fn start(&mut self, task: &Task, _attempt: u32, now: Seconds) {
        let jitter = self.config.duration_jitter;
        let factor = if jitter > 0.0 { 1.0 + self.task_rng.random_range(-jitter..jitter) } else { 1.0 };
        let duration = task.def.duration * factor;
        self.actions
            .insert(task.instance_id.clone(), Action { robot: task.robot.clone(), started: now, duration });
    }

    fn poll(&mut self, task: &Task, now: Seconds) -> ExecStatus {
        let Some(action) = self.actions.get(&task.instance_id).cloned() else {
            return ExecStatus::Failed("no action running".into());
        };
        if let Some(id) = &action.robot {
            if self.robots.get(id).is_some_and(|r| r.state.behavior == Behavior::Fallen) {
                self.actions.remove(&task.instance_id);
                return ExecStatus::Failed(format!("{id} fell during execution"));
            }
        }
        if now + EPS >= action.started + action.duration {
            self.actions.remove(&task.instance_id);
            self.finish_effects(task, now);
            ExecStatus::Finished
        } else {
            ExecStatus::Running
        }
    }

    fn postcondition(&mut self, task: &Task, _now: Seconds) -> Result<(), String> {
        let Some(id) = &task.robot else { return Ok(()) };
        let r = self.robots.get_mut(id).ok_or_else(|| format!("robot {id} is not simulated"))?;
        if r.post_failures > 0 {
            r.post_failures -= 1;
            return Err(format!("{} did not verify on {id}", task.def.label));
        }
        if task.def.id == "sensor_health_check" {
            let failed: Vec<&str> = r.state.failed_sensors().collect();
            if !failed.is_empty() {
                return Err(format!("failed sensors: {}", failed.join(", ")));
            }
        }
        Ok(())
    }

    fn abort(&mut self, task: &Task, _now: Seconds) {
        self.actions.remove(&task.instance_id);
    }
}
