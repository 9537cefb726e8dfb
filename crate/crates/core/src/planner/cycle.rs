//! The planning loop: cadence ticks plus event-driven replans.

use serde::{Deserialize, Serialize};

use super::relax::{relax_and_schedule, HardInfeasible, RelaxSettings};
use super::schedule::{schedule_with_budget, Schedule, DEFAULT_SEARCH_BUDGET};
use super::PlanningProblem;
use crate::model::Seconds;
use crate::store::{Alert, AlertLevel, EventBody, MissionSnapshot, PlanEvent, Store, StoreError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trigger {
    Cadence,
    LateTask,
    StrategyChange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerSettings {
    /// Mission-clock seconds between cadence plans.
    pub cadence: Seconds,
    pub relax_step: Seconds,
    /// Defaults to the exploration window length.
    pub max_slip: Option<Seconds>,
    pub search_budget: usize,
}

impl Default for PlannerSettings {
    fn default() -> Self {
        Self { cadence: 1.5, relax_step: 60.0, max_slip: None, search_budget: DEFAULT_SEARCH_BUDGET }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanOutcome {
    Updated(Schedule),
    Unchanged,
    Failed(HardInfeasible),
}

/// Schedule the snapshot's open tasks at `now`, relaxing deadlines if needed.
pub fn compute_plan(
    snapshot: &MissionSnapshot,
    now: Seconds,
    settings: &PlannerSettings,
) -> Result<Schedule, HardInfeasible> {
    let problem = PlanningProblem::from_graph(&snapshot.graph, now, snapshot.limits);
    if let Ok(s) = schedule_with_budget(&problem, settings.search_budget) {
        return Ok(s);
    }
    let max_slip = settings
        .max_slip
        .or_else(|| snapshot.phases.map(|p| p.exploration_length()))
        .unwrap_or(0.0);
    let relax = RelaxSettings::new(settings.relax_step, max_slip);
    relax_and_schedule(&problem, &relax).map(|(s, _)| s)
}

/// Single-flight planner state. Triggers raised between runs coalesce into
/// one follow-up plan.
#[derive(Debug, Clone, Default)]
pub struct PlanCycle {
    settings: PlannerSettings,
    pending: Option<Trigger>,
    last_run: Option<Seconds>,
    last_failure: Option<String>,
}

impl PlanCycle {
    pub fn new(settings: PlannerSettings) -> Self {
        Self { settings, pending: None, last_run: None, last_failure: None }
    }

    pub fn settings(&self) -> &PlannerSettings {
        &self.settings
    }

    /// Queue an event-driven replan. Event triggers take precedence over cadence.
    pub fn request(&mut self, trigger: Trigger) {
        self.pending = match (self.pending, trigger) {
            (Some(t), Trigger::Cadence) => Some(t),
            _ => Some(trigger),
        };
    }

    pub fn pending(&self) -> Option<Trigger> {
        self.pending
    }

    /// Run the queued replan, or a cadence plan if one is due.
    pub fn poll(&mut self, store: &mut Store, now: Seconds) -> Result<Option<PlanOutcome>, StoreError> {
        let due = self.last_run.is_none_or(|t| now - t >= self.settings.cadence - 1e-9);
        let trigger = match self.pending.take() {
            Some(t) => t,
            None if due => Trigger::Cadence,
            None => return Ok(None),
        };
        self.plan_cycle(store, trigger, now).map(Some)
    }

    /// Plan now and persist the result.
    pub fn plan_cycle(&mut self, store: &mut Store, trigger: Trigger, now: Seconds) -> Result<PlanOutcome, StoreError> {
        self.last_run = Some(now);
        let snap = store.snapshot();
        let plan_id = snap.plan_id + 1;
        let result = compute_plan(snap, now, &self.settings);
        let unchanged = match (&result, &snap.schedule) {
            (Ok(next), Some(prev)) => prev.same_plan(next),
            _ => false,
        };
        match result {
            Ok(schedule) => {
                self.last_failure = None;
                if unchanged {
                    store.append(now, EventBody::Plan(PlanEvent::Unchanged { plan_id, trigger, planned_at: now }))?;
                    return Ok(PlanOutcome::Unchanged);
                }
                let relaxation = schedule.relaxation.clone().filter(|r| !r.is_empty());
                store.append(now, EventBody::Plan(PlanEvent::Updated { plan_id, trigger, schedule: schedule.clone() }))?;
                if let Some(report) = relaxation {
                    let message = format!(
                        "schedule relaxed: {} task deadline(s) moved, total slip {}s",
                        report.relaxed_tasks.len(),
                        report.total_slip
                    );
                    store.append(now, EventBody::Relaxation(report))?;
                    store.append(
                        now,
                        EventBody::Alert(Alert { level: AlertLevel::Warning, source: "planner".into(), task: None, message }),
                    )?;
                }
                Ok(PlanOutcome::Updated(schedule))
            }
            Err(err) => {
                let reason = err.to_string();
                store.append(now, EventBody::Plan(PlanEvent::Failed { trigger, reason: reason.clone() }))?;
                if self.last_failure.as_deref() == Some(reason.as_str()) {
                    return Ok(PlanOutcome::Failed(err));
                }
                self.last_failure = Some(reason.clone());
                store.append(
                    now,
                    EventBody::Alert(Alert {
                        level: AlertLevel::Critical,
                        source: "planner".into(),
                        task: None,
                        message: format!("no feasible plan, keeping the previous schedule: {reason}"),
                    }),
                )?;
                Ok(PlanOutcome::Failed(err))
            }
        }
    }
}
