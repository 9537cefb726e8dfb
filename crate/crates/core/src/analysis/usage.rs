use std::collections::BTreeMap;

use serde::Serialize;

use crate::model::Seconds;
use crate::store::{EventBody, TelemetryEvent};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViewUsage {
    /// From the first view switch to the last event in the log.
    pub total: Seconds,
    pub seconds: BTreeMap<String, Seconds>,
    pub percent: BTreeMap<String, f64>,
}

/// Share of logged time spent in each console view.
pub fn usage_breakdown(events: &[TelemetryEvent]) -> ViewUsage {
    let mut switches: Vec<(Seconds, &str)> = events
        .iter()
        .filter_map(|e| match &e.body {
            EventBody::ViewSwitch(v) => Some((v.t, v.view.as_str())),
            _ => None,
        })
        .collect();
    switches.sort_by(|a, b| a.0.total_cmp(&b.0));
    let end = events
        .iter()
        .map(|e| match &e.body {
            EventBody::ViewSwitch(v) => v.t,
            EventBody::CursorSample(s) => s.t,
            _ => e.at,
        })
        .fold(f64::NEG_INFINITY, f64::max);

    let mut seconds: BTreeMap<String, Seconds> = BTreeMap::new();
    for (i, (t, view)) in switches.iter().enumerate() {
        let until = switches.get(i + 1).map_or(end, |n| n.0);
        *seconds.entry(view.to_string()).or_default() += (until - t).max(0.0);
    }
    let total: Seconds = seconds.values().sum();
    let percent = seconds
        .iter()
        .map(|(k, v)| (k.clone(), if total > 0.0 { 100.0 * v / total } else { 0.0 }))
        .collect();
    ViewUsage { total, seconds, percent }
}
