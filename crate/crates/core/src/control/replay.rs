use crate::control::Controller;
use crate::converter::{Action, ActionMode, Topology};
use crate::env::Environment;
use crate::error::{Error, Result};

/// Feeds back the input voltages a random reference was simulated with,
/// reproducing the reference exactly when nothing perturbs the plant.
#[derive(Debug, Clone)]
pub struct Replay {
    scale: f64,
    duties: Vec<Vec<f64>>,
    channels: usize,
    t: usize,
}

impl Replay {
    pub fn new(env: &Environment) -> Result<Self> {
        let spec = env.config().converter;
        if spec.mode != ActionMode::Continuous {
            return Err(Error::config("replay control needs a continuous action space"));
        }
        let scale = if spec.topology == Topology::B6 { 0.5 * spec.u_sup } else { spec.u_sup };
        Ok(Self { scale, duties: Vec::new(), channels: env.converter().channels(), t: 0 })
    }
}

impl Controller for Replay {
    fn reset(&mut self, env: &Environment) {
        self.t = 0;
        self.duties = env
            .reference()
            .and_then(|r| r.voltages.as_ref())
            .map(|v| v.iter().map(|u| u.iter().map(|x| x / self.scale).collect()).collect())
            .unwrap_or_default();
    }

    fn act(&mut self, _observation: &[f64]) -> Action {
        let duty = self.duties.get(self.t).cloned().unwrap_or_else(|| vec![0.0; self.channels]);
        self.t += 1;
        Action::Continuous(duty)
    }
}

/// Plays a fixed action sequence; the last action is held once it runs out.
#[derive(Debug, Clone)]
pub struct Scripted {
    actions: Vec<Action>,
    fallback: Action,
    t: usize,
}

impl Scripted {
    pub fn new(env: &Environment, actions: Vec<Action>) -> Result<Self> {
        let space = env.action_space();
        if let Some((t, a)) = actions.iter().enumerate().find(|(_, a)| !space.contains(a)) {
            return Err(Error::input(format!("scripted action {t} ({a:?}) outside {space:?}")));
        }
        let fallback = actions.last().cloned().unwrap_or_else(|| env.converter().zero_action());
        Ok(Self { actions, fallback, t: 0 })
    }
}

impl Controller for Scripted {
    fn reset(&mut self, _env: &Environment) {
        self.t = 0;
    }

    fn act(&mut self, _observation: &[f64]) -> Action {
        let a = self.actions.get(self.t).cloned().unwrap_or_else(|| self.fallback.clone());
        self.t += 1;
        a
    }
}
