use std::io::{self, Write};

use super::{DeploymentTable, Heatmap, ViewUsage};

pub fn write_deployment_csv(table: &DeploymentTable, out: impl Write) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["robot", "entry_s", "interval_s"])?;
    for r in &table.rows {
        let interval = r.interval.map(|i| format!("{i:.1}")).unwrap_or_default();
        w.write_record([r.robot.as_str(), &format!("{:.1}", r.entry), &interval])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_usage_csv(usage: &ViewUsage, out: impl Write) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["view", "seconds", "percent"])?;
    for (view, secs) in &usage.seconds {
        w.write_record([view.as_str(), &format!("{secs:.1}"), &format!("{:.2}", usage.percent[view])])?;
    }
    w.flush()?;
    Ok(())
}

/// Display-normalised grid, one CSV row per grid row.
pub fn write_grid_csv(map: &Heatmap, out: impl Write) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for row in map.normalized().chunks(map.width) {
        w.write_record(row.iter().map(|v| format!("{v:.6}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Binary greyscale image, brighter where activity is denser.
pub fn write_pgm(map: &Heatmap, mut out: impl Write) -> io::Result<()> {
    write!(out, "P5\n{} {}\n255\n", map.width, map.height)?;
    let bytes: Vec<u8> = map.normalized().iter().map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8).collect();
    out.write_all(&bytes)
}
