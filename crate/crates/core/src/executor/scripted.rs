use std::collections::BTreeMap;

use super::{ExecStatus, TaskActions};
use crate::model::{InstanceId, Seconds, Task};

/// How one task behaves under [`ScriptedActions`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Behaviour {
    pub precondition_fails: bool,
    /// Postcondition failures before the first pass.
    pub post_failures: u32,
    /// Execution failures reported at the end of the action, before the first success.
    pub exec_failures: u32,
    /// Actual duration per attempt; the last value repeats. Empty runs at nominal.
    pub durations: Vec<Seconds>,
    /// Never finishes.
    pub hang: bool,
}

/// Deterministic action bindings for dry runs and tests. Tasks without a
/// behaviour pass every check and run for exactly their nominal duration.
#[derive(Debug, Clone, Default)]
pub struct ScriptedActions {
    behaviours: BTreeMap<InstanceId, Behaviour>,
    running: BTreeMap<InstanceId, (Seconds, Seconds)>,
    /// `(task, hook, time)` for every hook invocation.
    pub calls: Vec<(InstanceId, &'static str, Seconds)>,
}

impl ScriptedActions {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, id: &str, behaviour: Behaviour) -> &mut Self {
        self.behaviours.insert(InstanceId::from(id), behaviour);
        self
    }

    fn entry(&mut self, id: &str) -> &mut Behaviour {
        self.behaviours.entry(InstanceId::from(id)).or_default()
    }

    pub fn fail_precondition(&mut self, id: &str) -> &mut Self {
        self.entry(id).precondition_fails = true;
        self
    }

    pub fn fail_postcondition(&mut self, id: &str, times: u32) -> &mut Self {
        self.entry(id).post_failures = times;
        self
    }

    pub fn fail_execution(&mut self, id: &str, times: u32) -> &mut Self {
        self.entry(id).exec_failures = times;
        self
    }

    pub fn durations(&mut self, id: &str, durations: &[Seconds]) -> &mut Self {
        self.entry(id).durations = durations.to_vec();
        self
    }

    pub fn hang(&mut self, id: &str) -> &mut Self {
        self.entry(id).hang = true;
        self
    }

    /// Hooks called for `id`, in order.
    pub fn hooks_for(&self, id: &str) -> Vec<&'static str> {
        self.calls.iter().filter(|c| c.0.as_str() == id).map(|c| c.1).collect()
    }
}

impl TaskActions for ScriptedActions {
    fn precondition(&mut self, task: &Task, now: Seconds) -> Result<(), String> {
        self.calls.push((task.instance_id.clone(), "pre", now));
        match self.behaviours.get(&task.instance_id) {
            Some(b) if b.precondition_fails => Err("scripted precondition failure".into()),
            _ => Ok(()),
        }
    }

    fn start(&mut self, task: &Task, attempt: u32, now: Seconds) {
        self.calls.push((task.instance_id.clone(), "start", now));
        let duration = match self.behaviours.get(&task.instance_id) {
            Some(b) if b.hang => f64::INFINITY,
            Some(b) if !b.durations.is_empty() => {
                let i = (attempt.max(1) as usize - 1).min(b.durations.len() - 1);
                b.durations[i]
            }
            _ => task.def.duration,
        };
        self.running.insert(task.instance_id.clone(), (now, duration));
    }

    fn poll(&mut self, task: &Task, now: Seconds) -> ExecStatus {
        let Some(&(start, duration)) = self.running.get(&task.instance_id) else {
            return ExecStatus::Failed("not started".into());
        };
        if now + 1e-9 < start + duration {
            return ExecStatus::Running;
        }
        self.running.remove(&task.instance_id);
        if let Some(b) = self.behaviours.get_mut(&task.instance_id) {
            if b.exec_failures > 0 {
                b.exec_failures -= 1;
                return ExecStatus::Failed("scripted execution failure".into());
            }
        }
        ExecStatus::Finished
    }

    fn postcondition(&mut self, task: &Task, now: Seconds) -> Result<(), String> {
        self.calls.push((task.instance_id.clone(), "post", now));
        if let Some(b) = self.behaviours.get_mut(&task.instance_id) {
            if b.post_failures > 0 {
                b.post_failures -= 1;
                return Err("scripted postcondition failure".into());
            }
        }
        Ok(())
    }

    fn abort(&mut self, task: &Task, now: Seconds) {
        self.calls.push((task.instance_id.clone(), "abort", now));
        self.running.remove(&task.instance_id);
    }
}
