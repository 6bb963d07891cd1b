use drivegym::bench::{benchmark, mae_per_step, run_episode};
use drivegym::control::{Controller, Hysteresis, PiCascade, Replay, Scripted};
use drivegym::converter::Action;
use drivegym::drive::MotorState;
use drivegym::env::{EnvConfig, Environment};
use drivegym::reference::{ReferenceTrajectory, ShapeKind};

fn env(id: &str, overrides: &str) -> Environment {
    Environment::make(id, &toml::from_str(overrides).unwrap()).unwrap()
}

fn constant_reference(env: &Environment, value: f64) -> ReferenceTrajectory {
    let len = env.config().episode_length + env.config().prediction_horizon;
    let tracked = env.observation_layout().tracked.clone();
    ReferenceTrajectory { shape: ShapeKind::External, values: vec![vec![value; len]; tracked.len()], entries: tracked, voltages: None }
}

fn rollout<C: Controller>(env: &mut Environment, c: &mut C, obs: Vec<f64>) -> Vec<drivegym::env::StepResult> {
    c.reset(env);
    let mut obs = obs;
    let mut out = Vec::new();
    loop {
        let s = env.step(&c.act(&obs)).unwrap();
        obs = s.observation.clone();
        let done = s.done;
        out.push(s);
        if done {
            return out;
        }
    }
}

#[test]
fn pi_removes_steady_state_speed_error() {
    // the heavy load inertia makes this loop slow; allow three seconds
    let mut e = env("series-cont-v0", "episode_length = 30000");
    let limit = e.normalization().limits[0];
    let target = 1.0 / limit;
    let r = constant_reference(&e, target);
    let obs = e.reset_with(Some(0), Some(MotorState(vec![0.0, 0.0])), Some(r)).unwrap();
    let mut pi = PiCascade::new(&e).unwrap();
    let steps = rollout(&mut e, &mut pi, obs);
    assert_eq!(steps.len(), 30_000);
    let last = &steps.last().unwrap().info.raw_state;
    assert!((last[0] - 1.0).abs() < 1e-3, "final speed: {}", last[0]);
    assert!(steps.iter().all(|s| s.info.violated.is_none()));
}

#[test]
fn hysteresis_tracks_current_within_band() {
    let mut e = env("series-disc-v0", "episode_length = 4000\n[reward_weights]\ni = 1.0");
    let r = constant_reference(&e, 0.5);
    let obs = e.reset_with(Some(0), Some(MotorState(vec![0.0, 0.0])), Some(r)).unwrap();
    let mut h = Hysteresis::new(&e, 0.05).unwrap();
    let steps = rollout(&mut e, &mut h, obs);
    assert_eq!(steps.len(), 4000);
    let limit = e.normalization().limits[2];
    let worst = steps[1000..].iter().map(|s| (s.info.raw_state[2] / limit - 0.5).abs()).fold(0.0, f64::max);
    // one switching step moves the current by about 0.08 in normalized units
    assert!(worst < 0.05 + 0.1, "worst steady error {worst}");
}

#[test]
fn replaying_reference_voltages_is_perfect() {
    // open-loop voltages drive the current well past the default nominal value
    let overrides = "episode_length = 3000\n[nominal]\ni = 200.0\ntorque = 50.0\n[reference.probabilities]\nsinusoidal = 0.0\ntriangular = 0.0\nrectangular = 0.0\nsawtooth = 0.0\nrandom_fourier = 1.0";
    let mut e = env("series-cont-v0", overrides);
    let mut replay = Replay::new(&e).unwrap();
    for seed in 0..5 {
        let rec = run_episode(&mut e, &mut replay, Some(seed)).unwrap();
        assert_eq!(rec.len(), 3000);
        let mae = mae_per_step(&rec, e.weights(), e.widths());
        assert!(mae < 1e-12, "seed {seed}: {mae}");
    }
    let cfg = e.config().clone();
    let report = benchmark(&cfg, |env: &Environment| Ok(Box::new(Replay::new(env)?) as Box<dyn Controller>), 4, 9).unwrap();
    assert!(report.mean_mae < 1e-12);
}

#[test]
fn zero_controller_on_zero_references() {
    let mut e = env("series-cont-v0", "episode_length = 500\n[load]\na = 0.0\nb = 0.0\nc = 0.0\nj_load = 1.0");
    let r = constant_reference(&e, 0.0);
    e.reset_with(Some(1), Some(MotorState(vec![0.0, 0.0])), Some(r)).unwrap();
    let mut zero = Scripted::new(&e, vec![]).unwrap();
    let steps = rollout(&mut e, &mut zero, vec![0.0; 6]);
    assert!(steps.iter().all(|s| s.reward == 1.0));
}

#[test]
fn violating_episode_is_truncated_with_penalty() {
    let mut e = env("series-cont-v0", "[limit_penalty]\nmode = \"constant\"\nvalue = -7.0");
    let mut full = Scripted::new(&e, vec![Action::Continuous(vec![1.0])]).unwrap();
    let rec = run_episode(&mut e, &mut full, Some(0)).unwrap();
    let last = rec.rows.last().unwrap();
    assert!(last.done && last.step < 10_000);
    assert_eq!(last.reward, -7.0);
    assert_eq!(rec.len(), last.step);
    assert!(rec.rows[..rec.len() - 1].iter().all(|r| !r.done && r.reward >= 0.0));
}

#[test]
fn pi_episode_covers_one_second() {
    let mut e = Environment::new(EnvConfig::from_id("series-cont-v0").unwrap()).unwrap();
    let mut pi = PiCascade::new(&e).unwrap();
    let rec = run_episode(&mut e, &mut pi, Some(77)).unwrap();
    assert_eq!(rec.len(), 10_000);
    assert!((rec.rows.last().unwrap().time_s - 1.0).abs() < 1e-9);
}

#[test]
fn benchmark_is_reproducible_and_seed_sensitive() {
    let cfg = EnvConfig::from_id("series-cont-v0").unwrap().with_overrides(&toml::from_str("episode_length = 500").unwrap()).unwrap();
    let pi = |env: &Environment| Ok(Box::new(PiCascade::new(env)?) as Box<dyn Controller>);
    let a = benchmark(&cfg, pi, 12, 5).unwrap();
    let b = benchmark(&cfg, pi, 12, 5).unwrap();
    let c = benchmark(&cfg, pi, 12, 6).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_ne!(a.episodes, c.episodes);
    assert_eq!(a.config_digest, cfg.digest());
}

#[test]
fn pi_rejects_unsupported_setups() {
    let pmsm = env("pmsm-cont-v0", "");
    assert!(PiCascade::new(&pmsm).unwrap_err().is_config());
    let disc = env("series-disc-v0", "");
    assert!(PiCascade::new(&disc).unwrap_err().is_config());
    let torque_only = env("series-cont-v0", "[reward_weights]\ntorque = 1.0");
    assert!(PiCascade::new(&torque_only).unwrap_err().is_config());
}

#[test]
fn pi_drives_every_dc_motor() {
    for id in ["series-cont-v0", "permex-cont-v0", "shunt-cont-v0", "extex-cont-v0"] {
        let mut e = env(id, "episode_length = 2000");
        let mut pi = PiCascade::new(&e).unwrap();
        let rec = run_episode(&mut e, &mut pi, Some(3)).unwrap();
        assert!(!rec.is_empty(), "{id}");
        assert!(rec.rows.iter().all(|r| r.raw.iter().all(|v| v.is_finite())), "{id}");
    }
}
