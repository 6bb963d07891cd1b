use crate::control::Controller;
use crate::converter::{Action, ActionMode, Topology};
use crate::env::Environment;
use crate::error::{Error, Result};

/// `(on, off)` switching commands of a single-channel DC converter.
pub fn on_off_commands(topology: Topology) -> Result<(usize, usize)> {
    match topology {
        Topology::OneQuadrant | Topology::TwoQuadrant => Ok((1, 0)),
        Topology::FourQuadrant => Ok((1, 2)),
        Topology::B6 => Err(Error::config("hysteresis control needs a DC converter")),
    }
}

/// Two-point controller on the first tracked entry.
#[derive(Debug, Clone)]
pub struct Hysteresis {
    band: f64,
    on: usize,
    off: usize,
    tracked: usize,
    reference: usize,
    last: usize,
}

impl Hysteresis {
    /// `band` is the half-width in normalized units.
    pub fn new(env: &Environment, band: f64) -> Result<Self> {
        if !(band.is_finite() && band > 0.0) {
            return Err(Error::config(format!("hysteresis band must be > 0, got {band}")));
        }
        let cfg = env.config();
        if cfg.converter.mode != ActionMode::Discrete || env.converter().channels() != 1 {
            return Err(Error::config("hysteresis control needs a single-channel discrete converter"));
        }
        let (on, off) = on_off_commands(cfg.converter.topology)?;
        let layout = env.observation_layout();
        let tracked = *layout
            .tracked
            .first()
            .ok_or_else(|| Error::config("hysteresis control needs a tracked entry"))?;
        let reference = layout.reference_index(tracked, 0).expect("tracked entries have a reference");
        Ok(Self { band, on, off, tracked, reference, last: off })
    }

    pub fn band(&self) -> f64 {
        self.band
    }

    /// Switching decision for normalized tracked value and reference.
    pub fn decide(&mut self, tracked: f64, reference: f64) -> usize {
        if tracked < reference - self.band {
            self.last = self.on;
        } else if tracked > reference + self.band {
            self.last = self.off;
        }
        self.last
    }
}

impl Controller for Hysteresis {
    fn reset(&mut self, _env: &Environment) {
        self.last = self.off;
    }

    fn act(&mut self, observation: &[f64]) -> Action {
        Action::Discrete(self.decide(observation[self.tracked], observation[self.reference]))
    }
}
