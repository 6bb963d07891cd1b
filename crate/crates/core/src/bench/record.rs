//! Per-step trajectory records and their CSV form.
//!
//! Header: `step,time_s`, then `<entry>_raw,<entry>_norm,<entry>_ref` for
//! every state entry (the reference cell is empty for untracked entries),
//! then `action_<ch>` per action value, then `reward,done`. Numbers use the
//! shortest representation that parses back to the same `f64`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    /// Steps taken, starting at 1.
    pub step: usize,
    pub time_s: f64,
    pub raw: Vec<f64>,
    pub norm: Vec<f64>,
    /// Reference per entry, `None` for untracked entries.
    pub reference: Vec<Option<f64>>,
    /// Commanded action values.
    pub action: Vec<f64>,
    pub reward: f64,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub entry_names: Vec<String>,
    pub rows: Vec<RecordRow>,
}

impl TrajectoryRecord {
    pub fn new(entry_names: Vec<String>) -> Self {
        Self { entry_names, rows: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn entry_index(&self, name: &str) -> Option<usize> {
        self.entry_names.iter().position(|n| n == name)
    }

    /// Whether the episode ended on a limit violation rather than its length.
    pub fn ended_early(&self, episode_length: usize) -> bool {
        self.rows.last().is_some_and(|r| r.done && r.step < episode_length)
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["step".to_string(), "time_s".to_string()];
        for name in &self.entry_names {
            h.extend([format!("{name}_raw"), format!("{name}_norm"), format!("{name}_ref")]);
        }
        let n_action = self.rows.first().map_or(1, |r| r.action.len());
        h.extend((0..n_action).map(|c| format!("action_{c}")));
        h.extend(["reward".to_string(), "done".to_string()]);
        h
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(self.header()).map_err(csv_err)?;
        for row in &self.rows {
            let mut fields = vec![row.step.to_string(), row.time_s.to_string()];
            for k in 0..self.entry_names.len() {
                fields.push(row.raw[k].to_string());
                fields.push(row.norm[k].to_string());
                fields.push(row.reference[k].map(|v| v.to_string()).unwrap_or_default());
            }
            fields.extend(row.action.iter().map(f64::to_string));
            fields.push(row.reward.to_string());
            fields.push(row.done.to_string());
            w.write_record(&fields).map_err(csv_err)?;
        }
        w.flush().map_err(|source| Error::Io { path: path.to_path_buf(), source })
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
        let bad = |msg: String| Error::input(format!("{}: {msg}", path.display()));
        let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
        let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
        if header.len() < 4 || header[0] != "step" || header[1] != "time_s" {
            return Err(bad("not a trajectory record header".into()));
        }
        let entry_names: Vec<String> =
            header.iter().filter_map(|h| h.strip_suffix("_raw")).map(str::to_string).collect();
        let n_entries = entry_names.len();
        let n_action = header.iter().filter(|h| h.starts_with("action_")).count();
        let expected = TrajectoryRecord { entry_names: entry_names.clone(), rows: Vec::new() };
        let mut expected_header = expected.header();
        if n_action != 1 {
            let start = 2 + 3 * n_entries;
            expected_header.splice(start..start + 1, (0..n_action).map(|c| format!("action_{c}")));
        }
        if header != expected_header {
            return Err(bad(format!("unexpected header {header:?}")));
        }
        let mut rows = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let field = |i: usize| rec.get(i).unwrap_or("");
            let num = |i: usize| -> Result<f64> {
                field(i).parse().map_err(|_| bad(format!("row {}: '{}' is not a number", line + 1, field(i))))
            };
            let mut row = RecordRow {
                step: field(0).parse().map_err(|_| bad(format!("row {}: bad step '{}'", line + 1, field(0))))?,
                time_s: num(1)?,
                raw: Vec::with_capacity(n_entries),
                norm: Vec::with_capacity(n_entries),
                reference: Vec::with_capacity(n_entries),
                action: Vec::with_capacity(n_action),
                reward: num(2 + 3 * n_entries + n_action)?,
                done: match field(3 + 3 * n_entries + n_action) {
                    "true" => true,
                    "false" => false,
                    other => return Err(bad(format!("row {}: bad done flag '{other}'", line + 1))),
                },
            };
            for k in 0..n_entries {
                row.raw.push(num(2 + 3 * k)?);
                row.norm.push(num(3 + 3 * k)?);
                let cell = 4 + 3 * k;
                row.reference.push(if field(cell).is_empty() { None } else { Some(num(cell)?) });
            }
            for c in 0..n_action {
                row.action.push(num(2 + 3 * n_entries + c)?);
            }
            rows.push(row);
        }
        Ok(TrajectoryRecord { entry_names, rows })
    }
}

/// Mean per step of the weighted, width-scaled absolute tracking error.
pub fn mae_per_step(record: &TrajectoryRecord, weights: &[f64], widths: &[f64]) -> f64 {
    if record.rows.is_empty() {
        return 0.0;
    }
    let total: f64 = record
        .rows
        .iter()
        .map(|row| {
            (0..weights.len())
                .filter(|&k| weights[k] != 0.0)
                .map(|k| weights[k] * (row.norm[k] - row.reference[k].unwrap_or(0.0)).abs() / widths[k])
                .sum::<f64>()
        })
        .sum();
    total / record.rows.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TrajectoryRecord {
        let mut rec = TrajectoryRecord::new(vec!["omega".into(), "i".into()]);
        for t in 1..=4 {
            rec.rows.push(RecordRow {
                step: t,
                time_s: t as f64 * 1e-4,
                raw: vec![0.1 * t as f64, 1.0 / 3.0],
                norm: vec![0.1 * t as f64 / 478.4, f64::MIN_POSITIVE],
                reference: vec![Some(0.3), None],
                action: vec![0.25, -1e-300],
                reward: 1.0 - 0.7 / t as f64,
                done: t == 4,
            });
        }
        rec
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.csv");
        let rec = sample();
        rec.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), rec.len() + 1);
        assert!(text.starts_with("step,time_s,omega_raw,omega_norm,omega_ref,i_raw,i_norm,i_ref,action_0,action_1,reward,done"));
        assert_eq!(TrajectoryRecord::read_csv(&path).unwrap(), rec);
    }

    #[test]
    fn mae_zero_for_perfect_tracking() {
        let mut rec = sample();
        for row in &mut rec.rows {
            row.reference[0] = Some(row.norm[0]);
        }
        assert_eq!(mae_per_step(&rec, &[1.0, 0.0], &[1.0, 1.0]), 0.0);
        assert!(mae_per_step(&sample(), &[1.0, 0.0], &[1.0, 1.0]) > 0.0);
    }

    #[test]
    fn read_rejects_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(TrajectoryRecord::read_csv(&path).is_err());
        assert!(matches!(TrajectoryRecord::read_csv(&dir.path().join("missing.csv")), Err(Error::Csv { .. })));
    }
}
