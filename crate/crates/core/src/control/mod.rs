//! Classical baseline controllers acting on environment observations.

mod hysteresis;
mod pi;
mod replay;

pub use hysteresis::{on_off_commands, Hysteresis};
pub use pi::{tune_pi, PiCascade, PiGains, PiTuning, TorqueMap};
pub use replay::{Replay, Scripted};

use crate::converter::Action;
use crate::env::Environment;

/// A feedback policy driven by observations.
pub trait Controller: Send {
    /// Called after every environment reset, before the first action.
    fn reset(&mut self, env: &Environment);

    fn act(&mut self, observation: &[f64]) -> Action;
}

impl<C: Controller + ?Sized> Controller for Box<C> {
    fn reset(&mut self, env: &Environment) {
        (**self).reset(env)
    }

    fn act(&mut self, observation: &[f64]) -> Action {
        (**self).act(observation)
    }
}
