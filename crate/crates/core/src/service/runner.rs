//! Headless mission runs: mission control driven by the scripted operator.

use std::path::Path;

use serde::Serialize;

use super::{ArtifactStatus, AutoOperator, MissionControl, OperatorAction, ServiceError};
use crate::model::{MissionTemplate, RobotId, Seconds, TemplateError};
use crate::sim::Scenario;
use crate::store::{CourseEntry, MissionPhase, Store};

/// Resolve `default`, `baseline`, or a path to a template document.
pub fn load_template(name: &str) -> Result<MissionTemplate, TemplateError> {
    match name {
        "default" => Ok(MissionTemplate::default_mission()),
        "baseline" => Ok(MissionTemplate::manual_baseline()),
        path => {
            let text = std::fs::read_to_string(Path::new(path)).map_err(|e| {
                TemplateError::Parse(serde_json::Error::io(e))
            })?;
            MissionTemplate::from_json(&text)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub robots: Vec<RobotId>,
    pub events: u64,
    pub ended_at: Seconds,
    pub course_entries: Vec<CourseEntry>,
    /// First to last course entry.
    pub deployment_span: Option<Seconds>,
    pub reports: usize,
    pub submitted: u32,
    pub correct: usize,
    pub alerts: usize,
}

/// Run `scenario` to the end of its mission window. Operator actions that
/// mission control rejects are left in the log and otherwise ignored.
pub fn run_scenario(
    template: MissionTemplate,
    scenario: &Scenario,
    robots: Vec<RobotId>,
    store: Store,
) -> Result<(RunSummary, Store), ServiceError> {
    run_scenario_with(template, scenario, robots, store, |_| {})
}

/// As [`run_scenario`], calling `observe` with the served state after every tick.
pub fn run_scenario_with(
    template: MissionTemplate,
    scenario: &Scenario,
    robots: Vec<RobotId>,
    store: Store,
    mut observe: impl FnMut(&MissionControl),
) -> Result<(RunSummary, Store), ServiceError> {
    scenario.validate().map_err(|e| ServiceError::Rejected(e.to_string()))?;
    let mut operator = AutoOperator::new(
        scenario.operator.clone(),
        robots.clone(),
        template.robot_selection_task.as_deref(),
        scenario.sim.seed,
    );
    let mut control = MissionControl::new(template, scenario, robots.clone(), store)?;
    control.start()?;
    let mut guard = 0u64;
    let max_ticks = ((control.end() / scenario.tick).ceil() as u64).saturating_add(10);
    while !control.is_finished() {
        guard += 1;
        if guard > max_ticks {
            return Err(ServiceError::Rejected("mission did not reach its end time".into()));
        }
        drive_operator(&mut control, &mut operator)?;
        control.tick(scenario.tick)?;
        observe(&control);
    }

    let snap = control.snapshot();
    let entries = snap.course_entries.clone();
    let span = match (entries.first(), entries.last()) {
        (Some(a), Some(b)) => Some(b.at - a.at),
        _ => None,
    };
    let summary = RunSummary {
        scenario: scenario.name.clone(),
        robots,
        events: control.store().len(),
        ended_at: control.now(),
        deployment_span: span,
        course_entries: entries,
        reports: snap.artifacts.len(),
        submitted: snap.submitted,
        correct: snap.artifacts.values().filter(|r| r.status == ArtifactStatus::Submitted && r.correct == Some(true)).count(),
        alerts: snap.alerts.len(),
    };
    Ok((summary, control.into_store()))
}

/// Let the operator react to the current state; repeats while new gates
/// keep opening at the same instant, as confirmations can cascade.
pub fn drive_operator(control: &mut MissionControl, operator: &mut AutoOperator) -> Result<(), ServiceError> {
    for _ in 0..32 {
        if control.snapshot().phase == MissionPhase::Ended {
            return Ok(());
        }
        let now = control.now();
        let actions = {
            let fleet = control.fleet();
            let looks_real = |r: &super::ArtifactReport| fleet.score(&r.class, r.effective_position());
            operator.decide(control.snapshot(), now, &looks_real)
        };
        let mut acted = false;
        for action in actions {
            let result = match action {
                OperatorAction::Command(cmd) => {
                    acted = true;
                    control.apply_command(cmd).map(|_| ())
                }
                OperatorAction::Review { artifact, action } => control.review_artifact(&artifact, action).map(|_| ()),
                OperatorAction::Telemetry(batch) => control.ingest_telemetry(batch).map(|_| ()),
            };
            match result {
                Err(ServiceError::Store(e)) => return Err(ServiceError::Store(e)),
                _ => {}
            }
        }
        if !acted {
            return Ok(());
        }
        control.replan_now()?;
    }
    Ok(())
}
