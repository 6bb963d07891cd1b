use crate::drive::{env_state_vector, EnvStateVector, LoadParams, MotorModel, MotorState};
use crate::error::Result;
use crate::integrate::{step_ode, IntegratorChoice};

/// Motor, load and discretization: everything needed to advance the
/// physical state by one sampling period under a held input voltage.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    pub model: MotorModel,
    pub load: LoadParams,
    pub integrator: IntegratorChoice,
    pub u_sup: f64,
}

impl Plant {
    pub fn step(&self, state: &[f64], u_in: &[f64]) -> Result<MotorState> {
        let rhs = |x: &[f64], dx: &mut [f64]| self.model.derivative_into(x, u_in, &self.load, dx);
        let mut next = step_ode(&self.integrator, rhs, state)?;
        self.model.wrap_state(&mut next);
        Ok(MotorState(next))
    }

    pub fn env_vector(&self, state: &[f64], u_in: &[f64]) -> Result<EnvStateVector> {
        env_state_vector(&self.model, state, u_in, self.u_sup)
    }

    /// Open-loop rollout: entry `t` of the result is the environment vector of
    /// state `t` with voltage `voltages[t]`, which then drives state `t + 1`.
    pub fn simulate(&self, initial: &[f64], voltages: &[Vec<f64>]) -> Result<Vec<EnvStateVector>> {
        let mut state = MotorState(initial.to_vec());
        let mut out = Vec::with_capacity(voltages.len());
        for (t, u) in voltages.iter().enumerate() {
            out.push(self.env_vector(&state, u)?);
            if t + 1 < voltages.len() {
                state = self.step(&state, u)?;
            }
        }
        Ok(out)
    }
}
