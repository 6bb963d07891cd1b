use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use drivegym::bench::{mae_per_step, TrajectoryRecord};
use drivegym::env::{EnvConfig, Environment};
use serde_json::Value;

fn drivegym(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drivegym")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = drivegym(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    drivegym(args).status.code().unwrap()
}

fn short_config(dir: &Path, id: &str, length: usize) -> PathBuf {
    let cfg = EnvConfig::from_id(id).unwrap();
    let cfg = cfg.with_overrides(&toml::from_str(&format!("episode_length = {length}")).unwrap()).unwrap();
    let path = dir.join(format!("{id}.toml"));
    fs::write(&path, cfg.to_toml_string()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_one_row_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path(), "series-cont-v0", 400);
    let out = dir.path().join("run.csv");
    let summary: Value = serde_json::from_str(&ok(&["run", "--config", s(&cfg), "--seed", "4", "--out", s(&out)])).unwrap();
    let steps = summary["steps"].as_u64().unwrap() as usize;
    assert_eq!(steps, 400);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), steps + 1);
    assert!(text.starts_with("step,time_s,omega_raw,omega_norm,omega_ref,"));
    assert!(text.lines().next().unwrap().ends_with("action_0,reward,done"));

    let record = TrajectoryRecord::read_csv(&out).unwrap();
    let env = Environment::new(EnvConfig::from_path(&cfg).unwrap()).unwrap();
    let mae = mae_per_step(&record, env.weights(), env.widths());
    assert_eq!(summary["mae"].as_f64().unwrap(), mae);
}

#[test]
fn bench_is_reproducible_and_recomputable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path(), "series-cont-v0", 300);
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let records = dir.path().join("records");
    let line = ok(&["bench", "--config", s(&cfg), "--episodes", "6", "--seed", "11", "--out", s(&a), "--records", s(&records)]);
    assert!(line.contains("min") && line.contains("mean") && line.contains("max"));
    ok(&["bench", "--config", s(&cfg), "--episodes", "6", "--seed", "11", "--out", s(&b)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let report: Value = serde_json::from_slice(&fs::read(&a).unwrap()).unwrap();
    let env = Environment::new(EnvConfig::from_path(&cfg).unwrap()).unwrap();
    let episodes = report["episodes"].as_array().unwrap();
    assert_eq!(episodes.len(), 6);
    let mut maes = Vec::new();
    for (i, ep) in episodes.iter().enumerate() {
        let record = TrajectoryRecord::read_csv(&records.join(format!("episode_{i:04}.csv"))).unwrap();
        let mae = mae_per_step(&record, env.weights(), env.widths());
        assert_eq!(ep["mae"].as_f64().unwrap(), mae);
        assert_eq!(ep["length"].as_u64().unwrap() as usize, record.len());
        maes.push(mae);
    }
    let mean = maes.iter().sum::<f64>() / maes.len() as f64;
    assert!((report["mean_mae"].as_f64().unwrap() - mean).abs() < 1e-15);
    assert_eq!(report["min_mae"].as_f64().unwrap(), maes.iter().cloned().fold(f64::INFINITY, f64::min));
}

#[test]
fn bench_prints_report_without_out() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path(), "series-disc-v0", 200);
    let text = fs::read_to_string(&cfg).unwrap().replace("[reward_weights]\nomega = 1.0", "[reward_weights]\ni = 1.0");
    fs::write(&cfg, text).unwrap();
    let report: Value =
        serde_json::from_str(&ok(&["bench", "--config", s(&cfg), "--controller", "hysteresis", "--band", "0.02", "--episodes", "3"]))
            .unwrap();
    assert_eq!(report["env_id"], "series-disc-v0");
    assert!(report["mean_mae"].as_f64().unwrap() >= 0.0);
}

#[test]
fn exported_reference_is_tracked_verbatim() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path(), "series-cont-v0", 250);
    let reference = dir.path().join("ref.csv");
    ok(&["export", "--config", s(&cfg), "--seed", "8", "--out", s(&reference)]);
    let text = fs::read_to_string(&reference).unwrap();
    assert!(text.starts_with("step,time_s,omega_ref\n"));
    let values: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 251);

    let out = dir.path().join("run.csv");
    ok(&["run", "--config", s(&cfg), "--seed", "1", "--reference", s(&reference), "--out", s(&out)]);
    let record = TrajectoryRecord::read_csv(&out).unwrap();
    for row in &record.rows {
        assert_eq!(row.reference[0], Some(values[row.step]));
    }
}

#[test]
fn export_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cfg.toml");
    ok(&["export", "--id", "pmsm-disc-v0", "--what", "config", "--out", s(&out)]);
    let cfg = EnvConfig::from_path(&out).unwrap();
    assert_eq!(cfg, EnvConfig::from_id("pmsm-disc-v0").unwrap());
}

#[test]
fn external_actions_are_replayed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path(), "series-disc-v0", 50);
    let actions = dir.path().join("actions.json");
    fs::write(&actions, "[1, 1, 0, 1]").unwrap();
    let out = dir.path().join("run.csv");
    ok(&["run", "--config", s(&cfg), "--controller", "external", "--actions", s(&actions), "--out", s(&out)]);
    let record = TrajectoryRecord::read_csv(&out).unwrap();
    let applied: Vec<f64> = record.rows.iter().take(6).map(|r| r.action[0]).collect();
    assert_eq!(applied, vec![1.0, 1.0, 0.0, 1.0, 1.0, 1.0]);

    fs::write(&actions, "[0, 7]").unwrap();
    assert_eq!(code(&["run", "--config", s(&cfg), "--controller", "external", "--actions", s(&actions), "--out", s(&out)]), 1);
    assert_eq!(code(&["run", "--config", s(&cfg), "--controller", "external", "--out", s(&out)]), 1);
}

#[test]
fn plot_writes_svg() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path(), "series-cont-v0", 300);
    let record = dir.path().join("run.csv");
    ok(&["run", "--config", s(&cfg), "--out", s(&record)]);
    let svg = dir.path().join("plot.svg");
    ok(&["plot", "--config", s(&cfg), "--input", s(&record), "--entries", "omega,i", "--out", s(&svg)]);
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") && text.trim_end().ends_with("</svg>"));
    let captions: Vec<&str> = text.lines().map(str::trim).collect();
    assert!(captions.contains(&"omega") && captions.contains(&"i"));
    assert!(text.matches("<polyline").count() >= 2);

    assert_eq!(code(&["plot", "--config", s(&cfg), "--input", s(&record), "--entries", "flux", "--out", s(&svg)]), 1);
}

#[test]
fn exit_codes_separate_config_and_runtime_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    assert_eq!(code(&["run", "--id", "dc-cont-v0", "--out", s(&out)]), 1);
    assert_eq!(code(&["run", "--id", "pmsm-cont-v0", "--out", s(&out)]), 1);
    assert_eq!(code(&["run", "--config", s(&dir.path().join("missing.toml")), "--out", s(&out)]), 1);
    assert_eq!(code(&["run", "--out", s(&out)]), 1);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["bench", "--id", "series-cont-v0", "--episodes", "0"]), 1);

    let bad = dir.path().join("bad.toml");
    let text = EnvConfig::from_id("series-cont-v0").unwrap().to_toml_string().replace("r_a = ", "r_x = 1.0\nr_a = ");
    fs::write(&bad, text).unwrap();
    let o = drivegym(&["run", "--config", s(&bad), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("r_x"));

    let cfg = short_config(dir.path(), "series-cont-v0", 20);
    let unwritable = dir.path().join("no/such/dir/x.csv");
    assert_eq!(code(&["run", "--config", s(&cfg), "--out", s(&unwritable)]), 2);
    assert_eq!(code(&["--help"]), 0);
}
