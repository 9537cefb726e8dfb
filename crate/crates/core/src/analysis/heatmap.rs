use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Seconds;
use crate::store::CursorSample;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("dpi must be positive, got {0}")]
    Dpi(f64),
    #[error("invalid heatmap config: {0}")]
    Config(String),
}

/// Measured gaze-to-cursor offset at 96 dpi: median and spread in pixels.
const OFFSET_MEDIAN_96: f64 = 77.0;
const OFFSET_SPREAD_96: f64 = 33.9;

/// Kernel `(mu, sigma)` in pixels for a display of `dpi`.
pub fn kernel_scale(dpi: f64) -> Result<(u32, u32), AnalysisError> {
    if !(dpi > 0.0) || !dpi.is_finite() {
        return Err(AnalysisError::Dpi(dpi));
    }
    let mu = (OFFSET_MEDIAN_96 * dpi / 96.0).round();
    let sigma = (OFFSET_SPREAD_96 * dpi / 96.0).round();
    Ok((mu as u32, sigma as u32))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelShape {
    /// Density peaks on a circle of radius `mu` around the cursor.
    #[default]
    Ring,
    /// Plain Gaussian centred on the cursor, spread `sigma`; `mu` unused.
    ZeroMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapConfig {
    pub dpi: f64,
    pub mu: f64,
    pub sigma: f64,
    /// Screen size in pixels.
    pub grid: (u32, u32),
    /// Pixels per grid cell along each axis.
    pub cell: u32,
    pub inactivity_window: Seconds,
    pub sample_rate: f64,
    pub shape: KernelShape,
}

impl HeatmapConfig {
    /// Console resolution, kernel derived from `dpi`.
    pub fn for_dpi(dpi: f64) -> Result<Self, AnalysisError> {
        let (mu, sigma) = kernel_scale(dpi)?;
        Ok(Self {
            dpi,
            mu: mu as f64,
            sigma: sigma as f64,
            grid: (1920, 1080),
            cell: 1,
            inactivity_window: 10.0,
            sample_rate: 1.5,
            shape: KernelShape::Ring,
        })
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        let bad = |m: &str| Err(AnalysisError::Config(m.to_string()));
        if !(self.mu > 0.0 && self.sigma > 0.0) {
            return bad("mu and sigma must be positive");
        }
        if self.grid.0 == 0 || self.grid.1 == 0 || self.cell == 0 {
            return bad("grid and cell size must be non-zero");
        }
        if !(self.sample_rate > 0.0) || self.inactivity_window < 0.0 {
            return bad("sample_rate must be positive and inactivity_window non-negative");
        }
        Ok(())
    }
}

/// Drop every sample belonging to a run of identical positions that lasts
/// longer than the inactivity window. A run of `n` samples at rate `f`
/// covers `n / f` seconds; consecutive samples further apart than one and
/// a half sample periods do not belong to the same run.
pub fn filter_inactive(samples: &[CursorSample], config: &HeatmapConfig) -> Vec<CursorSample> {
    let period = 1.0 / config.sample_rate;
    let mut keep = Vec::with_capacity(samples.len());
    let mut i = 0;
    while i < samples.len() {
        let mut j = i + 1;
        while j < samples.len()
            && samples[j].x == samples[i].x
            && samples[j].y == samples[i].y
            && samples[j].t - samples[j - 1].t <= 1.5 * period + 1e-9
        {
            j += 1;
        }
        let duration = samples[j - 1].t - samples[i].t + period;
        if duration <= config.inactivity_window + 1e-9 {
            keep.extend_from_slice(&samples[i..j]);
        }
        i = j;
    }
    keep
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Heatmap {
    /// Cells per row and per column.
    pub width: usize,
    pub height: usize,
    pub cell: u32,
    /// Row-major deposited mass, before display normalisation.
    pub values: Vec<f64>,
    pub deposited: usize,
    /// Samples outside the grid, not deposited.
    pub clipped: usize,
    /// Deposited samples whose kernel support crossed the grid edge and
    /// was renormalised over the cells inside.
    pub edge_truncated: usize,
}

impl Heatmap {
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Values scaled to `[0, 1]` by the maximum cell.
    pub fn normalized(&self) -> Vec<f64> {
        let max = self.values.iter().copied().fold(0.0, f64::max);
        if max > 0.0 {
            self.values.iter().map(|v| v / max).collect()
        } else {
            vec![0.0; self.values.len()]
        }
    }
}

/// Accumulate a kernel density of cursor positions. Each sample inside the
/// grid deposits exactly unit mass.
pub fn heatmap(samples: &[CursorSample], config: &HeatmapConfig) -> Result<Heatmap, AnalysisError> {
    config.validate()?;
    let cell = config.cell as f64;
    let width = config.grid.0.div_ceil(config.cell) as usize;
    let height = config.grid.1.div_ceil(config.cell) as usize;
    let (mu, sigma) = match config.shape {
        KernelShape::Ring => (config.mu, config.sigma),
        KernelShape::ZeroMean => (0.0, config.sigma),
    };
    let reach = mu + 5.0 * sigma;
    let kernel = |r: f64| (-(r - mu).powi(2) / (2.0 * sigma * sigma)).exp();

    let mut map = Heatmap {
        width,
        height,
        cell: config.cell,
        values: vec![0.0; width * height],
        deposited: 0,
        clipped: 0,
        edge_truncated: 0,
    };
    let mut weights = Vec::new();
    for s in samples {
        if !(s.x >= 0.0 && s.y >= 0.0 && s.x < config.grid.0 as f64 && s.y < config.grid.1 as f64) {
            map.clipped += 1;
            continue;
        }
        let lo_x = ((s.x - reach) / cell).floor().max(0.0) as usize;
        let hi_x = (((s.x + reach) / cell).floor() as usize).min(width - 1);
        let lo_y = ((s.y - reach) / cell).floor().max(0.0) as usize;
        let hi_y = (((s.y + reach) / cell).floor() as usize).min(height - 1);
        let truncated = s.x - reach < 0.0
            || s.y - reach < 0.0
            || s.x + reach >= config.grid.0 as f64
            || s.y + reach >= config.grid.1 as f64;

        weights.clear();
        let mut total = 0.0;
        for y in lo_y..=hi_y {
            let cy = (y as f64 + 0.5) * cell - s.y;
            for x in lo_x..=hi_x {
                let cx = (x as f64 + 0.5) * cell - s.x;
                let w = kernel((cx * cx + cy * cy).sqrt());
                total += w;
                weights.push(w);
            }
        }
        if total <= 0.0 {
            map.clipped += 1;
            continue;
        }
        let mut k = 0;
        for y in lo_y..=hi_y {
            let row = y * width;
            for x in lo_x..=hi_x {
                map.values[row + x] += weights[k] / total;
                k += 1;
            }
        }
        map.deposited += 1;
        if truncated {
            map.edge_truncated += 1;
        }
    }
    Ok(map)
}
