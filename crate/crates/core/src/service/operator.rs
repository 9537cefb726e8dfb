//! Scripted stand-in for the human operator, used by simulated missions.
//!
//! It answers gates after a fixed latency (one at a time, as a single
//! person would), works through flagged artifact reports in confidence
//! order, and produces the console telemetry a real session would:
//! view switches and cursor samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{ArtifactReport, ArtifactStatus, OperatorCommand, ReviewAction, TelemetryBatch};
use crate::executor::GateDecision;
use crate::model::{Gate, InstanceId, RobotId, Seconds};
use crate::sim::{Criticality, OperatorProfile};
use crate::store::{CursorSample, MissionPhase, MissionSnapshot, ViewSwitch};

pub const VIEWS: [&str; 4] = ["split", "expanded-map", "health-grid", "artifact-drawer"];

/// Console resolution in logical pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreenLayout {
    pub width: f64,
    pub height: f64,
}

impl Default for ScreenLayout {
    fn default() -> Self {
        Self { width: 1920.0, height: 1080.0 }
    }
}

impl ScreenLayout {
    /// Screen region the cursor tends to stay in for a view, `[x0, y0, x1, y1]`.
    fn region(&self, view: &str, focus: usize) -> [f64; 4] {
        let (w, h) = (self.width, self.height);
        match view {
            // Robot cards left, task cards middle, map right.
            "split" => {
                let col = (focus % 3) as f64;
                [col * w / 3.0, 0.0, (col + 1.0) * w / 3.0, h]
            }
            "artifact-drawer" => [w * 0.55, h * 0.1, w, h],
            "health-grid" => [0.0, h * 0.1, w, h],
            _ => [0.0, 0.0, w, h],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorAction {
    Command(OperatorCommand),
    Review { artifact: String, action: ReviewAction },
    Telemetry(TelemetryBatch),
}

#[derive(Debug, Clone)]
pub struct AutoOperator {
    profile: OperatorProfile,
    fleet: Vec<RobotId>,
    selection_task: Option<InstanceId>,
    rng: ChaCha8Rng,
    layout: ScreenLayout,
    busy_until: Seconds,
    review: Option<(String, Seconds)>,
    view: Option<String>,
    view_since: Seconds,
    focus: usize,
    cursor: [f64; 2],
    next_sample: u64,
    inspected_critical: Vec<RobotId>,
}

impl AutoOperator {
    pub fn new(profile: OperatorProfile, fleet: Vec<RobotId>, selection_task: Option<&str>, seed: u64) -> Self {
        let layout = ScreenLayout::default();
        Self {
            profile,
            fleet,
            selection_task: selection_task.map(InstanceId::base),
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0004),
            cursor: [layout.width / 2.0, layout.height / 2.0],
            layout,
            busy_until: 0.0,
            review: None,
            view: None,
            view_since: 0.0,
            focus: 0,
            next_sample: 0,
            inspected_critical: Vec::new(),
        }
    }

    /// Actions for the moment `now`. `looks_real` stands in for the
    /// operator's judgement when looking at a report's imagery.
    pub fn decide(
        &mut self,
        snap: &MissionSnapshot,
        now: Seconds,
        looks_real: &dyn Fn(&ArtifactReport) -> bool,
    ) -> Vec<OperatorAction> {
        let mut out = Vec::new();
        if snap.phase == MissionPhase::SetupPending || snap.phase == MissionPhase::Ended {
            return out;
        }
        self.answer_gates(snap, now, &mut out);
        self.review_artifacts(snap, now, looks_real, &mut out);
        let views = self.choose_view(snap, now);
        let samples = self.cursor_samples(now);
        if !samples.is_empty() || !views.is_empty() {
            out.push(OperatorAction::Telemetry(TelemetryBatch { samples, views }));
        }
        out
    }

    fn answer_gates(&mut self, snap: &MissionSnapshot, now: Seconds, out: &mut Vec<OperatorAction>) {
        let mut gates: Vec<_> = snap.open_gates.values().collect();
        gates.sort_by(|a, b| a.issued_at.total_cmp(&b.issued_at).then_with(|| gate_number(&a.id).cmp(&gate_number(&b.id))));
        for g in gates {
            let ready = g.issued_at.max(self.busy_until) + self.profile.gate_latency;
            if now + 1e-9 < ready {
                break;
            }
            self.busy_until = ready;
            if self.selection_task.as_ref() == Some(&g.instance_id) {
                let robots = if self.profile.select.is_empty() { self.fleet.clone() } else { self.profile.select.clone() };
                out.push(OperatorAction::Command(OperatorCommand::SelectRobots { robots }));
            }
            let no_go = self.profile.no_go.iter().any(|t| t == g.instance_id.as_str());
            let decision = match (g.kind, no_go) {
                (_, true) => GateDecision::NoGo,
                (Gate::Gonogo, false) => GateDecision::Go,
                _ => GateDecision::Confirm,
            };
            out.push(OperatorAction::Command(OperatorCommand::GateDecision { request: g.id.clone(), decision }));
        }
    }

    fn review_artifacts(
        &mut self,
        snap: &MissionSnapshot,
        now: Seconds,
        looks_real: &dyn Fn(&ArtifactReport) -> bool,
        out: &mut Vec<OperatorAction>,
    ) {
        if let Some((id, opened)) = self.review.clone() {
            if now + 1e-9 < opened + self.profile.review_time {
                return;
            }
            self.review = None;
            let Some(report) = snap.artifacts.get(&id) else { return };
            if report.status != ArtifactStatus::Unreviewed {
                return;
            }
            if looks_real(report) {
                out.push(OperatorAction::Review { artifact: id.clone(), action: ReviewAction::Accept });
                if self.profile.submit_accepted && snap.budget > 0 {
                    out.push(OperatorAction::Review { artifact: id, action: ReviewAction::Submit });
                }
            } else {
                out.push(OperatorAction::Review { artifact: id, action: ReviewAction::Reject });
            }
            return;
        }
        let next = snap
            .artifacts
            .values()
            .filter(|r| r.flagged && r.status == ArtifactStatus::Unreviewed && r.review_opened_at.is_none())
            .max_by(|a, b| a.confidence.total_cmp(&b.confidence).then_with(|| b.id.cmp(&a.id)));
        if let Some(r) = next {
            self.review = Some((r.id.clone(), now));
            out.push(OperatorAction::Review { artifact: r.id.clone(), action: ReviewAction::Open });
        }
    }

    fn choose_view(&mut self, snap: &MissionSnapshot, now: Seconds) -> Vec<ViewSwitch> {
        let critical: Vec<RobotId> = snap
            .robots
            .values()
            .filter(|r| r.criticality == Criticality::Critical && !self.inspected_critical.contains(&r.id))
            .map(|r| r.id.clone())
            .collect();
        let current = self.view.clone().unwrap_or_default();
        let want = if self.review.is_some() {
            "artifact-drawer"
        } else if !critical.is_empty() {
            self.inspected_critical.extend(critical);
            "health-grid"
        } else if current == "health-grid" && now - self.view_since < 10.0 {
            "health-grid"
        } else if snap.phase == MissionPhase::Exploration && ((now / 120.0).floor() as i64) % 2 == 1 {
            "expanded-map"
        } else {
            "split"
        };
        if self.view.as_deref() == Some(want) {
            return Vec::new();
        }
        self.view = Some(want.to_string());
        self.view_since = now;
        self.focus = self.rng.random_range(0..3);
        vec![ViewSwitch { t: now, view: want.to_string() }]
    }

    fn cursor_samples(&mut self, now: Seconds) -> Vec<CursorSample> {
        let rate = self.profile.cursor_rate;
        if rate <= 0.0 {
            return Vec::new();
        }
        let view = self.view.clone().unwrap_or_else(|| "split".into());
        let region = self.layout.region(&view, self.focus);
        let step = Normal::new(0.0, 60.0).expect("valid spread");
        let mut out = Vec::new();
        loop {
            let t = self.next_sample as f64 / rate;
            if t > now + 1e-9 {
                break;
            }
            self.next_sample += 1;
            // Roughly a third of the time the hand rests on the mouse.
            if self.rng.random_bool(0.65) {
                let x = (self.cursor[0] + step.sample(&mut self.rng)).clamp(region[0], region[2] - 1.0);
                let y = (self.cursor[1] + step.sample(&mut self.rng)).clamp(region[1], region[3] - 1.0);
                self.cursor = [x.round(), y.round()];
            }
            out.push(CursorSample { t, x: self.cursor[0], y: self.cursor[1] });
        }
        out
    }
}

fn gate_number(id: &str) -> u64 {
    id.rsplit('-').next().and_then(|n| n.parse().ok()).unwrap_or(u64::MAX)
}
