//! Closed-loop rollouts and benchmark statistics.

mod record;

pub use record::{mae_per_step, RecordRow, TrajectoryRecord};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::Controller;
use crate::env::{EnvConfig, Environment};
use crate::error::{Error, Result};
use crate::reference::ReferenceTrajectory;

/// Runs one episode from a reset with `seed` until it is done.
pub fn run_episode<C: Controller + ?Sized>(
    env: &mut Environment,
    controller: &mut C,
    seed: Option<u64>,
) -> Result<TrajectoryRecord> {
    run_episode_with(env, controller, seed, None)
}

/// Like [`run_episode`], tracking `reference` instead of a generated one.
pub fn run_episode_with<C: Controller + ?Sized>(
    env: &mut Environment,
    controller: &mut C,
    seed: Option<u64>,
    reference: Option<ReferenceTrajectory>,
) -> Result<TrajectoryRecord> {
    let mut obs = env.reset_with(seed, None, reference)?;
    controller.reset(env);
    let layout = env.observation_layout().clone();
    let mut record = TrajectoryRecord::new(layout.entry_names.clone());
    let reference = env.reference().expect("reset creates a reference").clone();
    let tau = env.tau();
    loop {
        let action = controller.act(&obs);
        let step = env.step(&action)?;
        let t = step.info.step;
        let norm = env.normalization().normalize_all(&step.info.raw_state);
        let refs = (0..layout.state_len()).map(|k| reference.value(k, t)).collect();
        record.rows.push(RecordRow {
            step: t,
            time_s: t as f64 * tau,
            raw: step.info.raw_state,
            norm,
            reference: refs,
            action: action.values(),
            reward: step.reward,
            done: step.done,
        });
        if step.done {
            return Ok(record);
        }
        obs = step.observation;
    }
}

/// Summary of one benchmark episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub seed: u64,
    pub mae: f64,
    pub length: usize,
    pub violated: bool,
    pub total_reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub env_id: String,
    pub config_digest: String,
    pub seed: u64,
    pub episodes: Vec<EpisodeSummary>,
    pub min_mae: f64,
    pub mean_mae: f64,
    pub max_mae: f64,
    pub violations: usize,
    /// Violations counted up to and including each episode.
    pub cumulative_violations: Vec<usize>,
}

impl BenchmarkReport {
    /// Aggregates episode summaries in the given order.
    pub fn from_episodes(env_id: String, config_digest: String, seed: u64, episodes: Vec<EpisodeSummary>) -> Self {
        let maes: Vec<f64> = episodes.iter().map(|e| e.mae).collect();
        let min_mae = maes.iter().copied().fold(f64::INFINITY, f64::min);
        let max_mae = maes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean_mae = maes.iter().sum::<f64>() / maes.len() as f64;
        let mut count = 0;
        let cumulative_violations = episodes
            .iter()
            .map(|e| {
                count += usize::from(e.violated);
                count
            })
            .collect();
        Self {
            env_id,
            config_digest,
            seed,
            min_mae,
            mean_mae,
            max_mae,
            violations: count,
            cumulative_violations,
            episodes,
        }
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.episodes.iter().map(|e| e.length).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Episode seeds derived from a benchmark seed.
pub fn episode_seeds(seed: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random()).collect()
}

/// Runs `n` independently seeded episodes, in parallel, with a fresh
/// controller from `make_controller` each. Aggregation follows episode order,
/// so the report depends only on the configuration and `seed`.
pub fn benchmark<F>(config: &EnvConfig, make_controller: F, n: usize, seed: u64) -> Result<BenchmarkReport>
where
    F: Fn(&Environment) -> Result<Box<dyn Controller>> + Sync,
{
    if n == 0 {
        return Err(Error::usage("benchmark needs at least one episode"));
    }
    let template = Environment::new(config.clone())?;
    let seeds = episode_seeds(seed, n);
    let episodes: Vec<EpisodeSummary> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut env = template.clone();
            let mut controller = make_controller(&env)?;
            let record = run_episode(&mut env, &mut controller, Some(s)).map_err(|e| with_episode(e, i))?;
            Ok(EpisodeSummary {
                seed: s,
                mae: mae_per_step(&record, env.weights(), env.widths()),
                length: record.len(),
                violated: record.rows.last().is_some_and(|r| r.done && r.step < config.episode_length),
                total_reward: record.rows.iter().map(|r| r.reward).sum(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(BenchmarkReport::from_episodes(config.id(), config.digest(), seed, episodes))
}

fn with_episode(e: Error, i: usize) -> Error {
    match e {
        Error::Config(m) => Error::Config(format!("episode {i}: {m}")),
        Error::Input(m) => Error::Input(format!("episode {i}: {m}")),
        Error::Numerical(m) => Error::Numerical(format!("episode {i}: {m}")),
        Error::Usage(m) => Error::Usage(format!("episode {i}: {m}")),
        other => other,
    }
}
