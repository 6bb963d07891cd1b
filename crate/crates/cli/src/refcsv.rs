//! Reference trajectories as CSV: `step,time_s,<entry>_ref,...`, one row per
//! reference index starting at 0, normalized values.

use std::path::Path;

use anyhow::{bail, Context};
use drivegym::env::ObservationLayout;
use drivegym::reference::{ReferenceTrajectory, ShapeKind};

pub fn write_reference(path: &Path, layout: &ObservationLayout, tau: f64, reference: &ReferenceTrajectory) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    let mut header = vec!["step".to_string(), "time_s".to_string()];
    header.extend(reference.entries.iter().map(|&k| format!("{}_ref", layout.entry_names[k])));
    w.write_record(&header)?;
    for t in 0..reference.len() {
        let mut row = vec![t.to_string(), (t as f64 * tau).to_string()];
        row.extend(reference.values.iter().map(|v| v[t].to_string()));
        w.write_record(&row)?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Reads a reference for `layout`; the columns must name exactly the tracked
/// entries, in order.
pub fn read_reference(path: &Path, layout: &ObservationLayout) -> anyhow::Result<ReferenceTrajectory> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let expected: Vec<String> = ["step".to_string(), "time_s".to_string()]
        .into_iter()
        .chain(layout.tracked.iter().map(|&k| format!("{}_ref", layout.entry_names[k])))
        .collect();
    if header != expected {
        bail!("{}: header {:?} does not match the tracked entries, expected {:?}", path.display(), header, expected);
    }
    let mut values = vec![Vec::new(); layout.tracked.len()];
    for (line, record) in r.records().enumerate() {
        let record = record.with_context(|| format!("{}: row {}", path.display(), line + 1))?;
        for (j, field) in record.iter().skip(2).enumerate() {
            let v: f64 = field.parse().with_context(|| format!("{}: row {}: bad value '{field}'", path.display(), line + 1))?;
            values[j].push(v);
        }
    }
    Ok(ReferenceTrajectory { shape: ShapeKind::External, entries: layout.tracked.clone(), values, voltages: None })
}
