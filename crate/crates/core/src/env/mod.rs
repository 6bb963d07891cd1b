//! The environment: reset/step loop over a converter-fed motor.
//!
//! One step runs, in order: dead-time buffer, converter (with interlocking
//! error and input noise), ODE integration over `τ`, state vector assembly,
//! limit check, reward or penalty, and finally the observation with
//! measurement noise and the reference slice.
//!
//! The observation is the normalized state vector followed by, for every
//! tracked entry, the next `prediction_horizon` reference values.

pub mod config;
pub mod limits;
pub mod noise;
pub mod reward;

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::converter::{channels_for, Action, ActionBuffer, ActionSpace, Converter};
use crate::drive::{EnvStateVector, MotorKind, MotorState, Quantity};
use crate::error::{Error, Result};
use crate::integrate::IntegratorChoice;
use crate::plant::Plant;
use crate::reference::{reference_slice, ReferenceContext, ReferenceTrajectory};

pub use config::{EnvConfig, LimitPenalty, RewardKind};
pub use limits::Normalization;

/// Positions of the blocks inside an observation vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationLayout {
    pub entry_names: Vec<String>,
    /// Environment entries with a reference, in observation order.
    pub tracked: Vec<usize>,
    pub horizon: usize,
}

impl ObservationLayout {
    pub fn state_len(&self) -> usize {
        self.entry_names.len()
    }

    pub fn len(&self) -> usize {
        self.state_len() + self.tracked.len() * self.horizon
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Observation index of the reference of tracked entry `entry` at look-ahead `h`.
    pub fn reference_index(&self, entry: usize, h: usize) -> Option<usize> {
        let j = self.tracked.iter().position(|&e| e == entry)?;
        (h < self.horizon).then(|| self.state_len() + j * self.horizon + h)
    }
}

/// Per-step diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    /// Steps taken in this episode, including this one.
    pub step: usize,
    /// Name of the first entry beyond its limit.
    pub violated: Option<String>,
    /// Physical state vector without measurement noise.
    pub raw_state: Vec<f64>,
    /// Action that reached the converter after the dead-time delay.
    pub applied_action: Action,
    /// Converter output voltages including input noise.
    pub applied_voltage: Vec<f64>,
    /// The commanded duty cycle was outside its range.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

#[derive(Debug, Clone)]
struct EpisodeState {
    state: MotorState,
    env_vector: EnvStateVector,
    buffer: ActionBuffer,
    reference: ReferenceTrajectory,
    step: usize,
    done: bool,
}

#[derive(Debug, Clone)]
pub struct Environment {
    config: EnvConfig,
    plant: Plant,
    converter: Converter,
    normalization: Normalization,
    weights: Vec<f64>,
    noise: Vec<f64>,
    widths: Vec<f64>,
    voltage_entries: Vec<usize>,
    layout: ObservationLayout,
    zero: Vec<usize>,
    penalty: f64,
    rng: ChaCha8Rng,
    episode: Option<EpisodeState>,
}

impl Environment {
    /// Builds the environment for an id like `series-cont-v0`, with
    /// `overrides` merged on top of the id's default configuration.
    pub fn make(id: &str, overrides: &toml::Table) -> Result<Self> {
        let cfg = EnvConfig::from_id(id)?.with_overrides(overrides)?;
        Self::new(cfg)
    }

    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        let kind = config.motor.kind();
        let entries = kind.entries();
        let channels = channels_for(&config.converter, kind.is_dc(), kind.input_len())?;
        let converter = Converter::new(config.converter, config.tau, channels)?;
        let nominal: Vec<f64> = entries.iter().map(|e| config.nominal.get(e.name).copied().unwrap_or(TAU)).collect();
        let normalization = Normalization::new(kind, config.converter.topology, nominal, config.safety_margin);
        let per_entry = |map: &std::collections::BTreeMap<String, f64>| -> Vec<f64> {
            entries.iter().map(|e| map.get(e.name).copied().unwrap_or(0.0)).collect()
        };
        let weights = per_entry(&config.reward_weights);
        let noise = per_entry(&config.noise_levels);
        let tracked: Vec<usize> = (0..entries.len()).filter(|&k| weights[k] > 0.0).collect();
        let zero = config.zero_references.iter().filter_map(|n| kind.entry_index(n)).collect();
        let voltage_entries = (0..entries.len()).filter(|&k| entries[k].quantity == Quantity::Voltage).collect();
        let plant = Plant {
            model: config.motor,
            load: config.load,
            integrator: IntegratorChoice::new(config.integrator, config.tau)?,
            u_sup: config.converter.u_sup,
        };
        let layout = ObservationLayout {
            entry_names: entries.iter().map(|e| e.name.to_string()).collect(),
            tracked,
            horizon: config.prediction_horizon,
        };
        Ok(Self {
            penalty: reward::violation_penalty(&config.limit_penalty)?,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            widths: normalization.widths(),
            config,
            plant,
            converter,
            normalization,
            weights,
            noise,
            voltage_entries,
            layout,
            zero,
            episode: None,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn id(&self) -> String {
        self.config.id()
    }

    pub fn motor_kind(&self) -> MotorKind {
        self.config.motor.kind()
    }

    pub fn plant(&self) -> &Plant {
        &self.plant
    }

    pub fn converter(&self) -> &Converter {
        &self.converter
    }

    pub fn normalization(&self) -> &Normalization {
        &self.normalization
    }

    pub fn action_space(&self) -> ActionSpace {
        self.converter.action_space()
    }

    pub fn observation_layout(&self) -> &ObservationLayout {
        &self.layout
    }

    pub fn observation_len(&self) -> usize {
        self.layout.len()
    }

    /// Per-entry reward weights in state vector order.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Normalized-range width per entry, used to scale tracking errors.
    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    /// Reward substituted on a limit violation.
    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    pub fn tau(&self) -> f64 {
        self.config.tau
    }

    /// Reference trajectory of the current episode.
    pub fn reference(&self) -> Option<&ReferenceTrajectory> {
        self.episode.as_ref().map(|e| &e.reference)
    }

    /// Internal ODE state of the current episode.
    pub fn motor_state(&self) -> Option<&MotorState> {
        self.episode.as_ref().map(|e| &e.state)
    }

    /// Physical state vector of the current episode, without noise.
    pub fn state_vector(&self) -> Option<&EnvStateVector> {
        self.episode.as_ref().map(|e| &e.env_vector)
    }

    pub fn step_count(&self) -> usize {
        self.episode.as_ref().map_or(0, |e| e.step)
    }

    pub fn is_done(&self) -> bool {
        self.episode.as_ref().is_none_or(|e| e.done)
    }

    fn reference_context(&self) -> ReferenceContext<'_> {
        let (lo, hi) = self.config.converter.topology.voltage_range(self.config.converter.u_sup);
        ReferenceContext {
            config: &self.config.reference,
            plant: &self.plant,
            normalization: &self.normalization,
            voltage_ranges: vec![(lo, hi); self.converter.channels()],
            tracked: self.layout.tracked.clone(),
            zero: self.zero.clone(),
            episode_length: self.config.episode_length,
            length: self.config.episode_length + self.config.prediction_horizon,
            safety_margin: self.config.safety_margin,
        }
    }

    /// Starts a new episode from a random initial state with fresh references.
    /// A seed restarts the random stream; without one it continues.
    pub fn reset(&mut self, seed: Option<u64>) -> Result<Vec<f64>> {
        self.reset_with(seed, None, None)
    }

    /// Like [`Environment::reset`], optionally fixing the initial ODE state
    /// and the reference trajectory instead of sampling them.
    pub fn reset_with(
        &mut self,
        seed: Option<u64>,
        initial: Option<MotorState>,
        reference: Option<ReferenceTrajectory>,
    ) -> Result<Vec<f64>> {
        if let Some(seed) = seed {
            self.rng = ChaCha8Rng::seed_from_u64(seed);
        }
        let state = match initial {
            Some(s) => {
                if s.len() != self.motor_kind().state_len() || s.iter().any(|v| !v.is_finite()) {
                    return Err(Error::input(format!("invalid initial state {:?}", s.0)));
                }
                s
            }
            None => self.sample_initial_state(),
        };
        let ctx = self.reference_context();
        let reference = match reference {
            Some(r) => {
                check_reference(&r, &ctx)?;
                r
            }
            None => {
                let mut rng = self.rng.clone();
                let r = ctx.generate(&state, &mut rng)?;
                self.rng = rng;
                r
            }
        };
        let zero = self.converter.zero_action();
        let currents = self.plant.model.channel_currents(&state);
        let u0 = self.converter.convert(&zero, &currents)?.voltages;
        let env_vector = self.plant.env_vector(&state, &u0)?;
        let mut episode = EpisodeState {
            state,
            env_vector,
            buffer: ActionBuffer::new(self.config.converter.dead_time, zero),
            reference,
            step: 0,
            done: false,
        };
        let obs = self.observe(&mut episode)?;
        self.episode = Some(episode);
        Ok(obs)
    }

    /// Each ODE state entry uniform within its nominal range; negative values
    /// only where the topology admits them. PMSM currents are drawn in the
    /// `dq` plane inside the nominal current circle.
    fn sample_initial_state(&mut self) -> MotorState {
        let kind = self.motor_kind();
        let n = &self.normalization;
        let rng = &mut self.rng;
        let mut draw = |k: usize| {
            let x_n = n.nominal[k];
            if n.nonnegative[k] {
                rng.random_range(0.0..=x_n)
            } else {
                rng.random_range(-x_n..=x_n)
            }
        };
        match kind {
            MotorKind::ExternallyExcited | MotorKind::Shunt => {
                let (i_a, i_e, w) = (draw(2), draw(3), draw(0));
                MotorState(vec![i_a, i_e, w])
            }
            MotorKind::Series | MotorKind::PermanentlyExcited => {
                let (i, w) = (draw(2), draw(0));
                MotorState(vec![i, w])
            }
            MotorKind::Pmsm => {
                let p = self.plant.model.pole_pairs() as f64;
                let omega = draw(0) / p;
                let i_n = n.nominal[2];
                let r = i_n * self.rng.random_range(0.0f64..=1.0).sqrt();
                let phi = self.rng.random_range(0.0..TAU);
                let eps = self.rng.random_range(0.0..TAU);
                MotorState(vec![r * phi.cos(), r * phi.sin(), omega, eps])
            }
        }
    }

    fn check_action(&self, action: &Action) -> Result<()> {
        match (self.action_space(), action) {
            (ActionSpace::Discrete { n }, Action::Discrete(c)) => {
                if *c >= n {
                    return Err(Error::input(format!("switching command {c} out of range 0..{n}")));
                }
            }
            (ActionSpace::Continuous { low, .. }, Action::Continuous(d)) => {
                if d.len() != low.len() {
                    return Err(Error::input(format!("expected {} duty cycles, got {}", low.len(), d.len())));
                }
                if d.iter().any(|v| v.is_nan()) {
                    return Err(Error::input("duty cycle is NaN"));
                }
            }
            (space, _) => return Err(Error::input(format!("action {action:?} does not fit {space:?}"))),
        }
        Ok(())
    }

    pub fn step(&mut self, action: &Action) -> Result<StepResult> {
        let mut episode = match self.episode.take() {
            Some(e) if !e.done => e,
            other => {
                self.episode = other;
                return Err(Error::usage("step called on a finished episode, call reset first"));
            }
        };
        let result = self.advance(&mut episode, action);
        self.episode = Some(episode);
        result
    }

    fn advance(&mut self, episode: &mut EpisodeState, action: &Action) -> Result<StepResult> {
        self.check_action(action)?;
        let applied = episode.buffer.push(action.clone());
        let currents = self.plant.model.channel_currents(&episode.state);
        let out = self.converter.convert(&applied, &currents)?;
        let mut voltages = out.voltages;
        for (u, &k) in voltages.iter_mut().zip(&self.voltage_entries) {
            *u += noise::sample(self.noise[k], self.config.safety_margin, &mut self.rng) * self.normalization.limits[k];
        }

        let next = self.plant.step(&episode.state, &voltages)?;
        let env_vector = self.plant.env_vector(&next, &voltages)?;
        episode.state = next;
        episode.env_vector = env_vector;
        episode.step += 1;

        let violation = self.normalization.check(&episode.env_vector);
        let reward = match violation {
            Some(_) => self.penalty,
            None => {
                let state = self.clipped_state(&episode.env_vector);
                let reference = self.reference_vector(&episode.reference, episode.step);
                reward::reward(self.config.reward_function, &state, &reference, &self.weights, &self.widths)
            }
        };
        episode.done = violation.is_some() || episode.step >= self.config.episode_length;
        let observation = self.observe(episode)?;
        Ok(StepResult {
            observation,
            reward,
            done: episode.done,
            info: StepInfo {
                step: episode.step,
                violated: violation.map(|k| self.layout.entry_names[k].clone()),
                raw_state: episode.env_vector.0.clone(),
                applied_action: applied,
                applied_voltage: voltages,
                clamped: out.clamped,
            },
        })
    }

    /// Normalized state clipped to each entry's codomain.
    fn clipped_state(&self, env_vector: &[f64]) -> Vec<f64> {
        env_vector
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let (lo, hi) = self.normalization.bounds(k);
                let x = self.normalization.normalize(k, v);
                if x.is_nan() {
                    x
                } else {
                    x.clamp(lo, hi)
                }
            })
            .collect()
    }

    /// References at step `t` spread over the full state vector (untracked entries 0).
    fn reference_vector(&self, reference: &ReferenceTrajectory, t: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.layout.state_len()];
        for (j, &k) in reference.entries.iter().enumerate() {
            v[k] = reference.values[j][t];
        }
        v
    }

    fn observe(&mut self, episode: &mut EpisodeState) -> Result<Vec<f64>> {
        let mut obs = self.clipped_state(&episode.env_vector);
        for (k, x) in obs.iter_mut().enumerate() {
            // voltages already carry their input noise
            if !self.voltage_entries.contains(&k) {
                *x += noise::sample(self.noise[k], self.config.safety_margin, &mut self.rng);
            }
        }
        obs.extend(reference_slice(&episode.reference, episode.step, self.layout.horizon)?);
        Ok(obs)
    }
}

fn check_reference(r: &ReferenceTrajectory, ctx: &ReferenceContext<'_>) -> Result<()> {
    if r.entries != ctx.tracked {
        return Err(Error::input(format!(
            "reference entries {:?} do not match the tracked entries {:?}",
            r.entries, ctx.tracked
        )));
    }
    if r.values.len() != r.entries.len() || r.values.iter().any(|v| v.len() < ctx.length) {
        return Err(Error::input(format!("reference must hold {} values per tracked entry", ctx.length)));
    }
    if r.values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::input("reference contains non-finite values"));
    }
    Ok(())
}
