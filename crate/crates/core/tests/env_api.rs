//! The surface used by foreign-language bindings: `make`, reset/step,
//! space descriptors, seeding and the id scheme.

use drivegym::converter::{Action, ActionSpace};
use drivegym::drive::{DcMotorParams, MotorKind, MotorModel, MotorState};
use drivegym::env::{EnvConfig, Environment};
use drivegym::integrate::IntegratorMethod;
use drivegym::Error;

fn table(s: &str) -> toml::Table {
    toml::from_str(s).unwrap()
}

#[test]
fn make_series_with_parameter_table() {
    let overrides = table(
        "tau = 1e-4\n[motor]\nkind = \"series\"\nr_a = 2.78\nr_e = 1.0\nl_a = 6.3e-3\nl_e = 1.6e-3\nl_e_prime = 0.5e-3\npsi_e_prime = 0.0\nj_rotor = 0.017\n[load]\na = 0.01\nb = 0.12\nc = 0.1\nj_load = 1.0\n[converter]\nu_sup = 420.0",
    );
    let env = Environment::make("series-cont-v0", &overrides).unwrap();
    assert_eq!(env.action_space(), ActionSpace::Continuous { low: vec![0.0], high: vec![1.0] });
    assert_eq!(env.config().motor, MotorModel::Series(DcMotorParams::SERIES_EXAMPLE));
    assert_eq!(env.id(), "series-cont-v0");
}

#[test]
fn every_id_builds() {
    for kind in MotorKind::ALL {
        for (mode, discrete) in [("cont", false), ("disc", true)] {
            let id = format!("{kind}-{mode}-v0");
            let env = Environment::make(&id, &toml::Table::new()).unwrap();
            assert_eq!(matches!(env.action_space(), ActionSpace::Discrete { .. }), discrete, "{id}");
        }
    }
    let pmsm = Environment::make("pmsm-disc-v0", &toml::Table::new()).unwrap();
    assert_eq!(pmsm.action_space(), ActionSpace::Discrete { n: 8 });
    let extex = Environment::make("extex-disc-v0", &toml::Table::new()).unwrap();
    assert_eq!(extex.action_space(), ActionSpace::Discrete { n: 4 });
    let pmsm_cont = Environment::make("pmsm-cont-v0", &toml::Table::new()).unwrap();
    assert_eq!(pmsm_cont.action_space(), ActionSpace::Continuous { low: vec![-1.0; 3], high: vec![1.0; 3] });
}

#[test]
fn errors_name_the_problem() {
    let e = Environment::make("series-cont-v0", &table("[motor]\nr_x = 1.0")).unwrap_err();
    assert!(e.is_config() && e.to_string().contains("r_x"), "{e}");
    let e = Environment::make("dc-cont-v0", &toml::Table::new()).unwrap_err();
    assert!(e.is_config() && e.to_string().contains("dc"), "{e}");
    let e = Environment::make("series-cont-v0", &table("[converter]\ntopology = \"b6\"")).unwrap_err();
    assert!(e.is_config(), "{e}");
}

#[test]
fn observation_length_follows_layout() {
    let env = Environment::make(
        "pmsm-cont-v0",
        &table("prediction_horizon = 2\n[reward_weights]\ni_a = 0.4\ni_b = 0.3\ni_c = 0.3"),
    )
    .unwrap();
    assert_eq!(env.observation_len(), 16);
    let layout = env.observation_layout();
    assert_eq!(layout.reference_index(2, 0), Some(10));
    assert_eq!(layout.reference_index(2, 1), Some(11));
    assert_eq!(layout.reference_index(3, 0), Some(12));
    assert_eq!(layout.reference_index(4, 1), Some(15));
}

fn scripted_rollout(seed: u64, noise: bool) -> Vec<(Vec<f64>, f64, bool)> {
    let extra = if noise { "\n[noise_levels]\nomega = 0.01\ni = 0.02\nu = 0.01" } else { "" };
    let mut env = Environment::make("series-cont-v0", &table(&format!("episode_length = 1000{extra}"))).unwrap();
    let mut out = vec![(env.reset(Some(seed)).unwrap(), 0.0, false)];
    for t in 0..1000 {
        let s = env.step(&Action::Continuous(vec![((t * 37) % 100) as f64 / 100.0])).unwrap();
        out.push((s.observation, s.reward, s.done));
        if s.done {
            break;
        }
    }
    out
}

#[test]
fn seeded_rollouts_are_bit_identical() {
    for noise in [false, true] {
        let a = scripted_rollout(42, noise);
        let b = scripted_rollout(42, noise);
        let bits = |v: &Vec<(Vec<f64>, f64, bool)>| -> Vec<u64> {
            v.iter().flat_map(|(o, r, _)| o.iter().chain(std::iter::once(r)).map(|x| x.to_bits())).collect()
        };
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(bits(&a), bits(&scripted_rollout(43, noise)));
    }
}

#[test]
fn noise_changes_observation_not_reward_source() {
    let clean = scripted_rollout(42, false);
    let noisy = scripted_rollout(42, true);
    assert_ne!(clean[5].0, noisy[5].0);
}

#[test]
fn done_episode_refuses_steps_until_reset() {
    let mut env = Environment::make("series-cont-v0", &table("episode_length = 3")).unwrap();
    env.reset(Some(0)).unwrap();
    for _ in 0..3 {
        env.step(&Action::Continuous(vec![0.1])).unwrap();
    }
    assert!(env.is_done());
    assert!(matches!(env.step(&Action::Continuous(vec![0.1])), Err(Error::Usage(_))));
    env.reset(None).unwrap();
    assert!(!env.is_done());
    env.step(&Action::Continuous(vec![0.1])).unwrap();
}

#[test]
fn q_penalty_propagates_with_done() {
    let mut env =
        Environment::make("series-cont-v0", &table("[limit_penalty]\nmode = \"q_based\"\ngamma = 0.99")).unwrap();
    let r = {
        env.reset(Some(0)).unwrap();
        env.reference().unwrap().clone()
    };
    env.reset_with(None, Some(MotorState(vec![100.0, 0.0])), Some(r)).unwrap();
    let s = env.step(&Action::Continuous(vec![1.0])).unwrap();
    assert!(s.done);
    assert!((s.reward + 100.0).abs() < 1e-9);
}

#[test]
fn step_info_serializes() {
    let mut env = Environment::make("extex-disc-v0", &toml::Table::new()).unwrap();
    env.reset(Some(1)).unwrap();
    let s = env.step(&Action::Discrete(3)).unwrap();
    let json = serde_json::to_string(&s.info).unwrap();
    assert!(json.contains("applied_voltage"));
    assert_eq!(s.info.applied_voltage, vec![420.0, 420.0]);
}

#[test]
fn integrators_agree_on_series_benchmark() {
    let run = |method: IntegratorMethod| {
        let mut cfg = EnvConfig::from_id("series-cont-v0").unwrap();
        cfg.integrator = method;
        let env = Environment::new(cfg).unwrap();
        let plant = env.plant().clone();
        let mut x = MotorState(vec![0.0, 0.0]);
        for _ in 0..1000 {
            x = plant.step(&x, &[100.0]).unwrap();
        }
        x
    };
    let oracle = run(IntegratorMethod::Dopri5 { rtol: 1e-10, atol: 1e-10 });
    for method in [IntegratorMethod::Euler, IntegratorMethod::Rk4, IntegratorMethod::dopri5()] {
        let x = run(method);
        for k in 0..2 {
            let rel = (x[k] - oracle[k]).abs() / oracle[k].abs();
            assert!(rel < 1e-3, "{method:?} entry {k}: {rel:e}");
        }
    }
}
