//! Reference trajectory generation.
//!
//! Every episode draws one shape kind. Standard shapes (sinusoidal,
//! asymmetric triangular, rectangular, sawtooth) get independently sampled
//! period, amplitude, offset, phase and ratio per tracked entry. Random
//! references come from a band-limited random input voltage applied to the
//! motor itself, so all tracked quantities are mutually consistent.
//!
//! Values are normalized by the entry limits and clipped to the nominal
//! range, i.e. `[−1/ξ, 1/ξ]` (or `[0, 1/ξ]` for nonnegative entries).

use std::f64::consts::TAU;

use rand::Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::drive::MotorState;
use crate::env::limits::Normalization;
use crate::error::{Error, Result};
use crate::plant::Plant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Sinusoidal,
    Triangular,
    Rectangular,
    Sawtooth,
    RandomFourier,
    /// Supplied by the caller rather than generated.
    External,
}

impl ShapeKind {
    pub const SAMPLED: [ShapeKind; 5] = [
        ShapeKind::Sinusoidal,
        ShapeKind::Triangular,
        ShapeKind::Rectangular,
        ShapeKind::Sawtooth,
        ShapeKind::RandomFourier,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeProbabilities {
    pub sinusoidal: f64,
    pub triangular: f64,
    pub rectangular: f64,
    pub sawtooth: f64,
    pub random_fourier: f64,
}

impl Default for ShapeProbabilities {
    fn default() -> Self {
        Self { sinusoidal: 0.125, triangular: 0.125, rectangular: 0.125, sawtooth: 0.125, random_fourier: 0.5 }
    }
}

impl ShapeProbabilities {
    fn as_array(&self) -> [f64; 5] {
        [self.sinusoidal, self.triangular, self.rectangular, self.sawtooth, self.random_fourier]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReferenceConfig {
    pub probabilities: ShapeProbabilities,
    /// Period range of standard shapes as fractions of the episode length.
    pub period_range: [f64; 2],
    /// Range of the rise fraction (triangular) and duty (rectangular).
    pub ratio_range: [f64; 2],
    /// Cutoff frequency of random references in Hz; defaults to `1 / (20 τ)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth_hz: Option<f64>,
    /// Redraws allowed when the open-loop simulation diverges.
    pub max_retries: usize,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self {
            probabilities: ShapeProbabilities::default(),
            period_range: [0.01, 1.0],
            ratio_range: [0.1, 0.9],
            bandwidth_hz: None,
            max_retries: 5,
        }
    }
}

impl ReferenceConfig {
    pub fn validate(&self) -> Result<()> {
        let p = self.probabilities.as_array();
        if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::config("shape probabilities must be >= 0"));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("shape probabilities must sum to 1, got {total}")));
        }
        let [lo, hi] = self.period_range;
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::config(format!("invalid period_range [{lo}, {hi}]")));
        }
        let [lo, hi] = self.ratio_range;
        if !(lo > 0.0 && lo <= hi && hi < 1.0) {
            return Err(Error::config(format!("ratio_range must lie inside (0, 1), got [{lo}, {hi}]")));
        }
        if let Some(bw) = self.bandwidth_hz {
            if !(bw.is_finite() && bw > 0.0) {
                return Err(Error::config(format!("bandwidth_hz must be > 0, got {bw}")));
            }
        }
        Ok(())
    }
}

/// Reference values for the tracked entries of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTrajectory {
    pub shape: ShapeKind,
    /// Environment state vector indices of the tracked entries.
    pub entries: Vec<usize>,
    /// One normalized sequence per tracked entry.
    pub values: Vec<Vec<f64>>,
    /// Input voltages of a random reference, one vector per step.
    pub voltages: Option<Vec<Vec<f64>>>,
}

impl ReferenceTrajectory {
    pub fn len(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Reference of environment entry `entry` at step `t`, if tracked.
    pub fn value(&self, entry: usize, t: usize) -> Option<f64> {
        let j = self.entries.iter().position(|&e| e == entry)?;
        self.values[j].get(t).copied()
    }
}

/// Draws the shape kind of the next episode.
pub fn sample_shape<R: Rng + ?Sized>(probabilities: &ShapeProbabilities, rng: &mut R) -> ShapeKind {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (kind, p) in ShapeKind::SAMPLED.iter().zip(probabilities.as_array()) {
        acc += p;
        if u < acc {
            return *kind;
        }
    }
    // rounding at the top end
    ShapeKind::SAMPLED
        .iter()
        .zip(probabilities.as_array())
        .rev()
        .find(|(_, p)| *p > 0.0)
        .map(|(k, _)| *k)
        .unwrap_or(ShapeKind::RandomFourier)
}

/// Parameters of one standard waveform `offset + amplitude · w(phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeParams {
    /// Period in steps.
    pub period: f64,
    pub amplitude: f64,
    pub offset: f64,
    /// Initial phase as a fraction of the period.
    pub phase: f64,
    /// Rise fraction of the triangle or duty of the rectangle.
    pub ratio: f64,
}

/// Unit waveform in `[−1, 1]` at `phase ∈ [0, 1)`.
fn unit_wave(shape: ShapeKind, phase: f64, ratio: f64) -> f64 {
    match shape {
        ShapeKind::Sinusoidal => (TAU * phase).sin(),
        ShapeKind::Triangular => {
            if phase < ratio {
                -1.0 + 2.0 * phase / ratio
            } else {
                1.0 - 2.0 * (phase - ratio) / (1.0 - ratio)
            }
        }
        ShapeKind::Rectangular => {
            if phase < ratio {
                1.0
            } else {
                -1.0
            }
        }
        ShapeKind::Sawtooth => 2.0 * phase - 1.0,
        ShapeKind::RandomFourier | ShapeKind::External => 0.0,
    }
}

/// Renders a standard shape and clips it to `bounds`.
pub fn render_standard(shape: ShapeKind, params: &ShapeParams, length: usize, bounds: (f64, f64)) -> Vec<f64> {
    (0..length)
        .map(|t| {
            let phase = (params.phase + t as f64 / params.period).rem_euclid(1.0);
            let v = params.offset + params.amplitude * unit_wave(shape, phase, params.ratio);
            v.clamp(bounds.0, bounds.1)
        })
        .collect()
}

pub fn sample_standard_params<R: Rng + ?Sized>(
    config: &ReferenceConfig,
    episode_length: usize,
    bounds: (f64, f64),
    rng: &mut R,
) -> ShapeParams {
    let [p_lo, p_hi] = config.period_range;
    let l = episode_length as f64;
    let period = rng.random_range(p_lo * l..=p_hi * l).max(2.0);
    let half = 0.5 * (bounds.1 - bounds.0);
    let amplitude = rng.random_range(0.0..=half);
    let offset = rng.random_range(bounds.0 + amplitude..=bounds.1 - amplitude);
    let phase = rng.random_range(0.0..1.0);
    let [r_lo, r_hi] = config.ratio_range;
    let ratio = rng.random_range(r_lo..=r_hi);
    ShapeParams { period, amplitude, offset, phase, ratio }
}

pub fn generate_standard<R: Rng + ?Sized>(
    shape: ShapeKind,
    config: &ReferenceConfig,
    length: usize,
    episode_length: usize,
    bounds: (f64, f64),
    rng: &mut R,
) -> Vec<f64> {
    let params = sample_standard_params(config, episode_length, bounds, rng);
    render_standard(shape, &params, length, bounds)
}

/// Real signal of length `n` from its one-sided spectrum (bins `0..=n/2`).
pub fn signal_from_spectrum(spectrum: &[Complex<f64>], n: usize) -> Vec<f64> {
    let mut full = vec![Complex::new(0.0, 0.0); n];
    for (k, c) in spectrum.iter().enumerate().take(n / 2 + 1) {
        full[k] = *c;
        if k > 0 && k < n - k {
            full[n - k] = c.conj();
        }
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut full);
    full.iter().map(|c| c.re / n as f64).collect()
}

/// One-sided spectrum with `1/k` magnitudes and uniform phases on bins
/// `1..=cutoff_bin`, zero elsewhere.
pub fn random_spectrum<R: Rng + ?Sized>(n: usize, cutoff_bin: usize, rng: &mut R) -> Vec<Complex<f64>> {
    let mut spectrum = vec![Complex::new(0.0, 0.0); n / 2 + 1];
    for (k, c) in spectrum.iter_mut().enumerate().skip(1).take(cutoff_bin) {
        let phase = rng.random_range(0.0..TAU);
        *c = Complex::from_polar(1.0 / k as f64, phase);
    }
    spectrum
}

/// Highest populated bin for a cutoff frequency over `n` samples of period `tau`.
pub fn cutoff_bin(n: usize, tau: f64, bandwidth_hz: f64) -> usize {
    ((bandwidth_hz * n as f64 * tau).floor() as usize).min(n / 2)
}

/// Affine map of `signal` onto `[lo, hi]`; a constant signal maps to the midpoint.
pub fn scale_to_range(signal: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let min = signal.iter().copied().fold(f64::INFINITY, f64::min);
    let max = signal.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    if span.is_nan() || span <= 1e-12 * max.abs().max(min.abs()).max(1e-300) {
        return vec![0.5 * (lo + hi); signal.len()];
    }
    signal.iter().map(|v| (lo + (v - min) / span * (hi - lo)).clamp(lo, hi)).collect()
}

/// Extends `values` to `length` by repeating its last element.
pub fn pad_tail(mut values: Vec<f64>, length: usize) -> Vec<f64> {
    if let Some(&last) = values.last() {
        values.resize(length.max(values.len()), last);
    }
    values
}

/// What reference generation needs to know about the environment.
#[derive(Debug, Clone)]
pub struct ReferenceContext<'a> {
    pub config: &'a ReferenceConfig,
    pub plant: &'a Plant,
    pub normalization: &'a Normalization,
    /// Output voltage range of each converter channel.
    pub voltage_ranges: Vec<(f64, f64)>,
    /// Tracked environment entries.
    pub tracked: Vec<usize>,
    /// Tracked entries whose reference is identically zero.
    pub zero: Vec<usize>,
    pub episode_length: usize,
    /// Trajectory length, `episode_length + prediction_horizon`. Values past
    /// the final step repeat the last generated value.
    pub length: usize,
    pub safety_margin: f64,
}

impl ReferenceContext<'_> {
    /// Normalized nominal range of entry `k`.
    pub fn bounds(&self, k: usize) -> (f64, f64) {
        let (lo, hi) = self.normalization.bounds(k);
        if self.normalization.exempt[k] {
            // supply voltage and angle have no safety margin
            return (lo, hi);
        }
        (lo / self.safety_margin, hi / self.safety_margin)
    }

    /// Steps with genuine reference values: the reset step plus one per step.
    fn generated_len(&self) -> usize {
        (self.episode_length + 1).min(self.length)
    }

    fn bandwidth(&self) -> f64 {
        self.config.bandwidth_hz.unwrap_or(1.0 / (20.0 * self.plant.integrator.tau))
    }

    /// Random references from an open-loop rollout starting at `initial`.
    pub fn generate_random_fourier<R: Rng + ?Sized>(&self, initial: &MotorState, rng: &mut R) -> Result<ReferenceTrajectory> {
        let n = self.generated_len();
        let k_c = cutoff_bin(n, self.plant.integrator.tau, self.bandwidth());
        let mut last_err = None;
        for _ in 0..=self.config.max_retries {
            let channels: Vec<Vec<f64>> = self
                .voltage_ranges
                .iter()
                .map(|&(lo, hi)| scale_to_range(&signal_from_spectrum(&random_spectrum(n, k_c, rng), n), lo, hi))
                .collect();
            let voltages: Vec<Vec<f64>> = (0..n).map(|t| channels.iter().map(|c| c[t]).collect()).collect();
            match self.references_from_voltages(initial, voltages) {
                Ok(traj) => return Ok(traj),
                Err(e @ Error::Numerical(_)) => last_err = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(Error::numerical(format!(
            "random reference simulation diverged {} times: {}",
            self.config.max_retries + 1,
            last_err.map(|e| e.to_string()).unwrap_or_default()
        )))
    }

    /// Simulates `voltages` open loop and stores the clipped normalized states.
    pub fn references_from_voltages(&self, initial: &MotorState, voltages: Vec<Vec<f64>>) -> Result<ReferenceTrajectory> {
        let states = self.plant.simulate(initial, &voltages)?;
        let values = self
            .tracked
            .iter()
            .map(|&k| {
                if self.zero.contains(&k) {
                    return vec![0.0; self.length];
                }
                let (lo, hi) = self.bounds(k);
                let v = states.iter().map(|s| self.normalization.normalize(k, s[k]).clamp(lo, hi)).collect();
                pad_tail(v, self.length)
            })
            .collect();
        Ok(ReferenceTrajectory {
            shape: ShapeKind::RandomFourier,
            entries: self.tracked.clone(),
            values,
            voltages: Some(voltages),
        })
    }

    pub fn generate_standard<R: Rng + ?Sized>(&self, shape: ShapeKind, rng: &mut R) -> ReferenceTrajectory {
        let values = self
            .tracked
            .iter()
            .map(|&k| {
                if self.zero.contains(&k) {
                    vec![0.0; self.length]
                } else {
                    let v = generate_standard(shape, self.config, self.generated_len(), self.episode_length, self.bounds(k), rng);
                    pad_tail(v, self.length)
                }
            })
            .collect();
        ReferenceTrajectory { shape, entries: self.tracked.clone(), values, voltages: None }
    }

    /// Samples a shape and generates the episode references.
    pub fn generate<R: Rng + ?Sized>(&self, initial: &MotorState, rng: &mut R) -> Result<ReferenceTrajectory> {
        match sample_shape(&self.config.probabilities, rng) {
            ShapeKind::RandomFourier => self.generate_random_fourier(initial, rng),
            shape => Ok(self.generate_standard(shape, rng)),
        }
    }
}

/// References at steps `t .. t + horizon`, entry-major.
pub fn reference_slice(traj: &ReferenceTrajectory, t: usize, horizon: usize) -> Result<Vec<f64>> {
    if t + horizon > traj.len() {
        return Err(Error::usage(format!(
            "reference slice {t}..{} exceeds trajectory length {}",
            t + horizon,
            traj.len()
        )));
    }
    Ok(traj.values.iter().flat_map(|v| v[t..t + horizon].iter().copied()).collect())
}
