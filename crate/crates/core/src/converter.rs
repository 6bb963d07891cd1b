//! Dynamic average models of the power-electronic converters.
//!
//! Discrete command encodings:
//!
//! * 1QC: `0 → 0`, `1 → u_sup`
//! * 2QC: `0 → 0` (low switch), `1 → u_sup` (high switch),
//!   `2 →` both off: freewheeling diodes give `u_sup` for `i < 0`, else `0`
//! * 4QC: `0 → 0` (both legs low), `1 → +u_sup`, `2 → −u_sup`, `3 → 0` (both legs high)
//! * B6: bit `k` of the command drives phase `k` (`a` = bit 0); a set bit gives
//!   `+u_sup/2`, a cleared bit `−u_sup/2`
//!
//! A converter with several DC channels (the externally excited motor has one
//! for the armature and one for the excitation) accepts the flattened command
//! `c_0 + n·c_1 + n²·c_2 …` where `n` is the per-channel cardinality.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::drive::load::signum0;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Topology {
    #[serde(rename = "1qc")]
    OneQuadrant,
    #[serde(rename = "2qc")]
    TwoQuadrant,
    #[serde(rename = "4qc")]
    FourQuadrant,
    #[serde(rename = "b6")]
    B6,
}

impl Topology {
    /// Number of switching states of a single channel.
    pub fn switching_states(self) -> usize {
        match self {
            Topology::OneQuadrant => 2,
            Topology::TwoQuadrant => 3,
            Topology::FourQuadrant => 4,
            Topology::B6 => 8,
        }
    }

    /// Admissible normalized duty range per channel.
    pub fn duty_range(self) -> (f64, f64) {
        match self {
            Topology::OneQuadrant | Topology::TwoQuadrant => (0.0, 1.0),
            Topology::FourQuadrant | Topology::B6 => (-1.0, 1.0),
        }
    }

    /// Output voltage range of one channel.
    pub fn voltage_range(self, u_sup: f64) -> (f64, f64) {
        match self {
            Topology::OneQuadrant | Topology::TwoQuadrant => (0.0, u_sup),
            Topology::FourQuadrant => (-u_sup, u_sup),
            Topology::B6 => (-0.5 * u_sup, 0.5 * u_sup),
        }
    }

    /// Whether negative output currents are possible.
    pub fn bipolar_current(self) -> bool {
        self != Topology::OneQuadrant
    }

    pub fn is_dc(self) -> bool {
        self != Topology::B6
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::OneQuadrant => "1QC",
            Topology::TwoQuadrant => "2QC",
            Topology::FourQuadrant => "4QC",
            Topology::B6 => "B6",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionMode {
    Discrete,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConverterSpec {
    pub topology: Topology,
    pub mode: ActionMode,
    /// Supply (DC link) voltage in volts.
    pub u_sup: f64,
    /// Interlocking time in seconds.
    pub interlocking_time: f64,
    /// Delay every action by one sampling step.
    pub dead_time: bool,
}

impl ConverterSpec {
    pub fn new(topology: Topology, mode: ActionMode, u_sup: f64) -> Self {
        Self { topology, mode, u_sup, interlocking_time: 0.0, dead_time: false }
    }
}

/// Action accepted by an environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Action {
    Discrete(usize),
    Continuous(Vec<f64>),
}

impl Action {
    /// Values as written to trajectory records: the command index, or the duty cycles.
    pub fn values(&self) -> Vec<f64> {
        match self {
            Action::Discrete(c) => vec![*c as f64],
            Action::Continuous(d) => d.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ActionSpace {
    Discrete { n: usize },
    Continuous { low: Vec<f64>, high: Vec<f64> },
}

impl ActionSpace {
    /// Number of values in a recorded action.
    pub fn width(&self) -> usize {
        match self {
            ActionSpace::Discrete { .. } => 1,
            ActionSpace::Continuous { low, .. } => low.len(),
        }
    }

    pub fn contains(&self, action: &Action) -> bool {
        match (self, action) {
            (ActionSpace::Discrete { n }, Action::Discrete(c)) => c < n,
            (ActionSpace::Continuous { low, high }, Action::Continuous(d)) => {
                d.len() == low.len() && d.iter().zip(low.iter().zip(high)).all(|(v, (l, h))| v >= l && v <= h)
            }
            _ => false,
        }
    }
}

/// Result of a conversion: the averaged output voltage per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ConverterOutput {
    pub voltages: Vec<f64>,
    /// Set when a continuous duty cycle was outside its range and got clamped.
    pub clamped: bool,
}

/// Checks a converter against the motor family it feeds and returns the
/// channel count (B6: 3 phases, externally excited DC motor: 2, otherwise 1).
pub fn channels_for(spec: &ConverterSpec, motor_is_dc: bool, dc_channels: usize) -> Result<usize> {
    match (spec.topology.is_dc(), motor_is_dc) {
        (true, true) => Ok(dc_channels),
        (false, false) => Ok(3),
        (true, false) => Err(Error::config(format!("{} converter cannot feed a three-phase motor", spec.topology))),
        (false, true) => Err(Error::config("B6 bridge can only feed a three-phase motor")),
    }
}

/// A validated converter bound to a sampling time and a channel count.
#[derive(Debug, Clone, PartialEq)]
pub struct Converter {
    spec: ConverterSpec,
    tau: f64,
    channels: usize,
}

impl Converter {
    pub fn new(spec: ConverterSpec, tau: f64, channels: usize) -> Result<Self> {
        if !(spec.u_sup.is_finite() && spec.u_sup > 0.0) {
            return Err(Error::config(format!("u_sup must be > 0, got {}", spec.u_sup)));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::config(format!("sampling time must be > 0, got {tau}")));
        }
        if !(spec.interlocking_time >= 0.0 && spec.interlocking_time < tau) {
            return Err(Error::config(format!(
                "interlocking time must lie in [0, tau), got {}",
                spec.interlocking_time
            )));
        }
        if channels == 0 || (spec.topology == Topology::B6 && channels != 3) {
            return Err(Error::config(format!("{} converter cannot drive {channels} channels", spec.topology)));
        }
        Ok(Self { spec, tau, channels })
    }

    pub fn spec(&self) -> &ConverterSpec {
        &self.spec
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Number of independently commanded DC channels (B6 phases count as one unit).
    fn command_groups(&self) -> usize {
        if self.spec.topology == Topology::B6 {
            1
        } else {
            self.channels
        }
    }

    pub fn action_space(&self) -> ActionSpace {
        let topo = self.spec.topology;
        match self.spec.mode {
            ActionMode::Discrete => ActionSpace::Discrete { n: topo.switching_states().pow(self.command_groups() as u32) },
            ActionMode::Continuous => {
                let (lo, hi) = topo.duty_range();
                ActionSpace::Continuous { low: vec![lo; self.channels], high: vec![hi; self.channels] }
            }
        }
    }

    /// Action producing zero output voltage (B6: all phases low, zero line-to-line voltage).
    pub fn zero_action(&self) -> Action {
        match self.spec.mode {
            ActionMode::Discrete => Action::Discrete(0),
            ActionMode::Continuous => Action::Continuous(vec![0.0; self.channels]),
        }
    }

    /// Magnitude of the averaged interlocking voltage error.
    pub fn interlock_error(&self) -> f64 {
        match self.spec.topology {
            Topology::OneQuadrant => 0.0,
            _ => self.spec.u_sup * self.spec.interlocking_time / self.tau,
        }
    }

    /// Converts an action; `currents` are the channel output currents whose
    /// signs select the freewheeling path and the interlocking error.
    pub fn convert(&self, action: &Action, currents: &[f64]) -> Result<ConverterOutput> {
        if currents.len() != self.channels {
            return Err(Error::config(format!(
                "expected {} channel currents, got {}",
                self.channels,
                currents.len()
            )));
        }
        match (self.spec.mode, action) {
            (ActionMode::Continuous, Action::Continuous(duty)) => self.convert_continuous(duty, currents),
            (ActionMode::Discrete, Action::Discrete(cmd)) => self.convert_discrete(*cmd, currents),
            _ => Err(Error::input(format!("action {action:?} does not match a {:?} converter", self.spec.mode))),
        }
    }

    pub fn convert_continuous(&self, duty: &[f64], currents: &[f64]) -> Result<ConverterOutput> {
        if duty.len() != self.channels {
            return Err(Error::input(format!("expected {} duty cycles, got {}", self.channels, duty.len())));
        }
        if duty.iter().any(|d| d.is_nan()) {
            return Err(Error::input("duty cycle is NaN"));
        }
        let topo = self.spec.topology;
        let (d_lo, d_hi) = topo.duty_range();
        let (u_lo, u_hi) = topo.voltage_range(self.spec.u_sup);
        let scale = if topo == Topology::B6 { 0.5 * self.spec.u_sup } else { self.spec.u_sup };
        let delta = self.interlock_error();
        let mut clamped = false;
        let voltages = duty
            .iter()
            .zip(currents)
            .map(|(&d, &i)| {
                let dc = d.clamp(d_lo, d_hi);
                clamped |= dc != d;
                (dc * scale - delta * signum0(i)).clamp(u_lo, u_hi)
            })
            .collect();
        Ok(ConverterOutput { voltages, clamped })
    }

    pub fn convert_discrete(&self, cmd: usize, currents: &[f64]) -> Result<ConverterOutput> {
        let n_total = match self.action_space() {
            ActionSpace::Discrete { n } => n,
            ActionSpace::Continuous { .. } => unreachable!("discrete conversion on a continuous converter"),
        };
        if cmd >= n_total {
            return Err(Error::input(format!("switching command {cmd} out of range 0..{n_total}")));
        }
        let u = self.spec.u_sup;
        let topo = self.spec.topology;
        let voltages = if topo == Topology::B6 {
            (0..3).map(|k| if cmd >> k & 1 == 1 { 0.5 * u } else { -0.5 * u }).collect()
        } else {
            let n = topo.switching_states();
            let mut rest = cmd;
            currents
                .iter()
                .map(|&i| {
                    let c = rest % n;
                    rest /= n;
                    dc_switching_voltage(topo, c, i, u)
                })
                .collect()
        };
        Ok(ConverterOutput { voltages, clamped: false })
    }
}

fn dc_switching_voltage(topo: Topology, cmd: usize, current: f64, u_sup: f64) -> f64 {
    match (topo, cmd) {
        (Topology::OneQuadrant, 0) | (Topology::TwoQuadrant, 0) => 0.0,
        (Topology::OneQuadrant, 1) | (Topology::TwoQuadrant, 1) => u_sup,
        (Topology::TwoQuadrant, 2) => {
            if current < 0.0 {
                u_sup
            } else {
                0.0
            }
        }
        (Topology::FourQuadrant, 1) => u_sup,
        (Topology::FourQuadrant, 2) => -u_sup,
        (Topology::FourQuadrant, _) => 0.0,
        _ => unreachable!("command range checked by caller"),
    }
}

/// One-step delay line realizing the converter dead time.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionBuffer {
    pending: Option<Action>,
}

impl ActionBuffer {
    /// `zero` is queued when `dead_time` is on; otherwise the buffer is a pass-through.
    pub fn new(dead_time: bool, zero: Action) -> Self {
        Self { pending: dead_time.then_some(zero) }
    }

    pub fn depth(&self) -> usize {
        usize::from(self.pending.is_some())
    }

    /// Queues `action` and returns the one to apply in this step.
    pub fn push(&mut self, action: Action) -> Action {
        match self.pending.as_mut() {
            Some(slot) => std::mem::replace(slot, action),
            None => action,
        }
    }
}
