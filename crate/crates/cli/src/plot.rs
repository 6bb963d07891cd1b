//! Static SVG plots of recorded trajectories in normalized units.

use std::path::Path;

use anyhow::{anyhow, bail};
use drivegym::bench::TrajectoryRecord;
use plotters::prelude::*;

const STATE: RGBColor = RGBColor(31, 119, 180);
const REFERENCE: RGBColor = RGBColor(214, 39, 40);
const GUIDE: RGBColor = RGBColor(90, 90, 90);

/// One panel per entry: state, reference (if tracked), the nominal value
/// `±1/ξ` dotted and the limit `±1` dashed.
pub fn plot_record(record: &TrajectoryRecord, entries: &[String], safety_margin: f64, path: &Path) -> anyhow::Result<()> {
    if entries.is_empty() {
        bail!("nothing to plot");
    }
    if record.is_empty() {
        bail!("trajectory has no rows");
    }
    let indices = entries
        .iter()
        .map(|name| record.entry_index(name).ok_or_else(|| anyhow!("unknown entry '{name}', available: {:?}", record.entry_names)))
        .collect::<anyhow::Result<Vec<_>>>()?;

    let t_end = record.rows.last().map_or(1.0, |r| r.time_s);
    let t_start = record.rows[0].time_s.min(t_end);
    let nominal = 1.0 / safety_margin;

    let root = SVGBackend::new(path, (900, 260 * indices.len() as u32)).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    for (panel, (&k, name)) in root.split_evenly((indices.len(), 1)).iter().zip(indices.iter().zip(entries)) {
        let mut chart = ChartBuilder::on(panel)
            .caption(name, ("sans-serif", 18))
            .margin(8)
            .x_label_area_size(30)
            .y_label_area_size(45)
            .build_cartesian_2d(t_start..t_end.max(t_start + f64::EPSILON), -1.1..1.1)
            .map_err(draw_err)?;
        chart.configure_mesh().x_desc("t / s").y_desc("normalized").draw().map_err(draw_err)?;

        for level in [1.0, -1.0] {
            chart
                .draw_series(DashedLineSeries::new([(t_start, level), (t_end, level)], 6, 4, GUIDE.stroke_width(1)))
                .map_err(draw_err)?;
            chart
                .draw_series(DottedLineSeries::new([(t_start, level * nominal), (t_end, level * nominal)], 0, 5, |c| {
                    Circle::new(c, 1, GUIDE.filled())
                }))
                .map_err(draw_err)?;
        }
        chart
            .draw_series(LineSeries::new(record.rows.iter().map(|r| (r.time_s, r.norm[k])), STATE.stroke_width(1)))
            .map_err(draw_err)?;
        if record.rows.iter().any(|r| r.reference[k].is_some()) {
            let points = record.rows.iter().filter_map(|r| r.reference[k].map(|v| (r.time_s, v)));
            chart.draw_series(LineSeries::new(points, REFERENCE.stroke_width(1))).map_err(draw_err)?;
        }
    }
    root.present().map_err(draw_err)?;
    Ok(())
}

fn draw_err<E: std::fmt::Debug>(e: E) -> anyhow::Error {
    anyhow!("plotting failed: {e:?}")
}
