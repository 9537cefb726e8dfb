//! Post-mission analytics over a recorded event log: deployment timing,
//! console view usage, and cursor-activity heatmaps.

mod deployment;
mod heatmap;
mod output;
mod usage;

pub use deployment::{deployment_times, DeploymentRow, DeploymentTable, DEPLOYMENT_GOAL};
pub use heatmap::{filter_inactive, heatmap, kernel_scale, AnalysisError, Heatmap, HeatmapConfig, KernelShape};
pub use output::{write_deployment_csv, write_grid_csv, write_pgm, write_usage_csv};
pub use usage::{usage_breakdown, ViewUsage};

use crate::store::{EventBody, TelemetryEvent};

/// Cursor samples in log order.
pub fn cursor_samples(events: &[TelemetryEvent]) -> Vec<crate::store::CursorSample> {
    events
        .iter()
        .filter_map(|e| match &e.body {
            EventBody::CursorSample(s) => Some(*s),
            _ => None,
        })
        .collect()
}
