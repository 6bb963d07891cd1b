//! Cascaded PI speed control for DC motors.
//!
//! The inner loop sees the armature circuit `1/R · 1/(1 + s·L/R)` behind the
//! converter, whose sampling and averaging delay is lumped into
//! `T_σ = 1.5·τ`. Magnitude optimum cancels the electrical time constant:
//!
//! ```text
//! K_p,i = L / (2·T_σ·u_sup)      K_i,i = R / (2·T_σ·u_sup)      (duty per A, per A·s)
//! ```
//!
//! The closed current loop is approximated by `1/(1 + 2·T_σ·s)`, so the outer
//! loop integrates torque through `1/(J·s)` with the small time constant
//! `2·T_σ`. Symmetric optimum with `a = 2` gives
//!
//! ```text
//! K_p,ω = J / (4·T_σ)      T_n = 8·T_σ      K_i,ω = K_p,ω / T_n      (N·m per rad/s, per rad)
//! ```
//!
//! Torque set-points are mapped to armature current per motor family and
//! limited to the nominal current. Both integrators stop while their output
//! is saturated and the error pushes further into saturation.

use serde::{Deserialize, Serialize};

use crate::control::Controller;
use crate::converter::{Action, ActionMode, ActionSpace};
use crate::drive::{LoadParams, MotorModel};
use crate::env::Environment;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiGains {
    pub kp: f64,
    pub ki: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiTuning {
    /// Current loop gains in duty cycle per ampere (and per ampere-second).
    pub current: PiGains,
    /// Speed loop gains in N·m per rad/s (and per rad).
    pub speed: PiGains,
    /// Lumped small time constant.
    pub t_sigma: f64,
    /// Electrical time constant `L/R` of the armature circuit.
    pub t_e: f64,
}

/// Armature circuit resistance and inductance seen by the current loop.
fn armature_circuit(motor: &MotorModel) -> Result<(f64, f64)> {
    match motor {
        MotorModel::Series(p) => Ok((p.r_a + p.r_e, p.l_a + p.l_e)),
        MotorModel::ExternallyExcited(p) | MotorModel::Shunt(p) | MotorModel::PermanentlyExcited(p) => {
            Ok((p.r_a, p.l_a))
        }
        MotorModel::Pmsm(_) => Err(Error::config("PI cascade supports DC motors only")),
    }
}

pub fn tune_pi(motor: &MotorModel, load: &LoadParams, tau: f64, u_sup: f64) -> Result<PiTuning> {
    let (r, l) = armature_circuit(motor)?;
    let j = motor.total_inertia(load);
    let t_e = l / r;
    for (name, v) in [("sampling time", tau), ("supply voltage", u_sup), ("electrical time constant", t_e), ("inertia", j)]
    {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::config(format!("cannot tune PI cascade: {name} is {v}")));
        }
    }
    let t_sigma = 1.5 * tau;
    let kp_i = l / (2.0 * t_sigma * u_sup);
    let kp_w = j / (4.0 * t_sigma);
    Ok(PiTuning {
        current: PiGains { kp: kp_i, ki: kp_i / t_e },
        speed: PiGains { kp: kp_w, ki: kp_w / (8.0 * t_sigma) },
        t_sigma,
        t_e,
    })
}

/// Armature current producing a torque.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TorqueMap {
    /// `T = L'_E·i²`.
    Series { l_e_prime: f64 },
    /// `T = L'_E·i_E·i_A` with the measured excitation current.
    Excited { l_e_prime: f64 },
    /// `T = Ψ'_E·i_A`.
    Permanent { psi: f64 },
}

impl TorqueMap {
    fn for_motor(motor: &MotorModel) -> Result<Self> {
        match motor {
            MotorModel::Series(p) => Ok(TorqueMap::Series { l_e_prime: p.l_e_prime }),
            MotorModel::ExternallyExcited(p) | MotorModel::Shunt(p) => Ok(TorqueMap::Excited { l_e_prime: p.l_e_prime }),
            MotorModel::PermanentlyExcited(p) => Ok(TorqueMap::Permanent { psi: p.psi_e_prime }),
            MotorModel::Pmsm(_) => Err(Error::config("PI cascade supports DC motors only")),
        }
    }

    pub fn torque(&self, i: f64, i_e: f64) -> f64 {
        match *self {
            TorqueMap::Series { l_e_prime } => l_e_prime * i * i,
            TorqueMap::Excited { l_e_prime } => l_e_prime * i_e * i,
            TorqueMap::Permanent { psi } => psi * i,
        }
    }

    pub fn current(&self, torque: f64, i_e: f64) -> f64 {
        match *self {
            TorqueMap::Series { l_e_prime } => (torque.max(0.0) / l_e_prime).sqrt(),
            TorqueMap::Excited { l_e_prime } => {
                let flux = l_e_prime * i_e;
                if flux.abs() < 1e-12 {
                    0.0
                } else {
                    torque / flux
                }
            }
            TorqueMap::Permanent { psi } => {
                if psi > 0.0 {
                    torque / psi
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Slot {
    obs: usize,
    limit: f64,
}

impl Slot {
    fn read(&self, observation: &[f64]) -> f64 {
        observation[self.obs] * self.limit
    }
}

/// Speed (or current) controller for DC motors with continuous actions.
#[derive(Debug, Clone)]
pub struct PiCascade {
    tuning: PiTuning,
    tau: f64,
    map: TorqueMap,
    omega: Slot,
    omega_ref: Option<Slot>,
    current: Slot,
    current_ref: Option<Slot>,
    excitation: Option<Slot>,
    i_max: f64,
    i_min: f64,
    duty: (f64, f64),
    /// Constant duty of the excitation channel of a two-channel converter.
    excitation_duty: Option<f64>,
    speed_integral: f64,
    current_integral: f64,
}

impl PiCascade {
    /// Tunes a controller for `env`. Tracks the speed if it carries a
    /// reward weight, otherwise the armature current.
    pub fn new(env: &Environment) -> Result<Self> {
        let cfg = env.config();
        if cfg.converter.mode != ActionMode::Continuous {
            return Err(Error::config("PI cascade needs a continuous action space"));
        }
        let tuning = tune_pi(&cfg.motor, &cfg.load, cfg.tau, cfg.converter.u_sup)?;
        let layout = env.observation_layout();
        let norm = env.normalization();
        let slot = |k: usize| Slot { obs: k, limit: norm.limits[k] };
        let ref_slot = |k: usize| layout.reference_index(k, 0).map(|obs| Slot { obs, limit: norm.limits[k] });
        let kind = env.motor_kind();
        let i_idx = 2;
        let omega_ref = ref_slot(0);
        let current_ref = ref_slot(i_idx);
        if omega_ref.is_none() && current_ref.is_none() {
            return Err(Error::config("PI cascade needs a reward weight on the speed or the armature current"));
        }
        let excitation = matches!(kind, crate::drive::MotorKind::ExternallyExcited | crate::drive::MotorKind::Shunt)
            .then(|| slot(3));
        let i_n = norm.nominal[i_idx];
        let i_min = if norm.nonnegative[i_idx] { 0.0 } else { -i_n };
        let duty = match env.action_space() {
            ActionSpace::Continuous { low, high } => (low[0], high[0]),
            ActionSpace::Discrete { .. } => unreachable!("mode checked above"),
        };
        let excitation_duty = match &cfg.motor {
            MotorModel::ExternallyExcited(p) => {
                let i_e = norm.nominal[3];
                Some((p.r_e * i_e / cfg.converter.u_sup).clamp(duty.0, duty.1))
            }
            _ => None,
        };
        Ok(Self {
            tuning,
            tau: cfg.tau,
            map: TorqueMap::for_motor(&cfg.motor)?,
            omega: slot(0),
            omega_ref,
            current: slot(i_idx),
            current_ref,
            excitation,
            i_max: i_n,
            i_min,
            duty,
            excitation_duty,
            speed_integral: 0.0,
            current_integral: 0.0,
        })
    }

    pub fn tuning(&self) -> &PiTuning {
        &self.tuning
    }

    /// Current limits of the set-point, `(min, max)`.
    pub fn current_limits(&self) -> (f64, f64) {
        (self.i_min, self.i_max)
    }

    /// Outer loop: speed error to armature current set-point (A), limited to
    /// the nominal current.
    pub fn speed_step(&mut self, omega: f64, omega_ref: f64, i_e: f64) -> f64 {
        let e = omega_ref - omega;
        let g = self.tuning.speed;
        let t_hi = self.map.torque(self.i_max, i_e).max(self.map.torque(self.i_min, i_e));
        let t_lo = match self.map {
            TorqueMap::Series { .. } => 0.0,
            _ => self.map.torque(self.i_min, i_e).min(self.map.torque(self.i_max, i_e)),
        };
        let integral = self.speed_integral + g.ki * self.tau * e;
        let raw = g.kp * e + integral;
        let torque = raw.clamp(t_lo, t_hi);
        let pushing_out = (raw > t_hi && e > 0.0) || (raw < t_lo && e < 0.0);
        if !pushing_out {
            self.speed_integral = integral;
        }
        self.map.current(torque, i_e).clamp(self.i_min, self.i_max)
    }

    /// Inner loop: current error to duty cycle, saturated to the action range.
    pub fn current_step(&mut self, i_ref: f64, i: f64) -> f64 {
        let e = i_ref - i;
        let g = self.tuning.current;
        let integral = self.current_integral + g.ki * self.tau * e;
        let raw = g.kp * e + integral;
        let (lo, hi) = self.duty;
        let duty = raw.clamp(lo, hi);
        let pushing_out = (raw > hi && e > 0.0) || (raw < lo && e < 0.0);
        if !pushing_out {
            self.current_integral = integral;
        }
        duty
    }

    pub fn integrators(&self) -> (f64, f64) {
        (self.speed_integral, self.current_integral)
    }
}

impl Controller for PiCascade {
    fn reset(&mut self, _env: &Environment) {
        self.speed_integral = 0.0;
        self.current_integral = 0.0;
    }

    fn act(&mut self, observation: &[f64]) -> Action {
        let i = self.current.read(observation);
        let i_e = self.excitation.map_or(0.0, |s| s.read(observation));
        let i_ref = match (self.omega_ref, self.current_ref) {
            (Some(w_ref), _) => self.speed_step(self.omega.read(observation), w_ref.read(observation), i_e),
            (None, Some(c_ref)) => c_ref.read(observation).clamp(self.i_min, self.i_max),
            (None, None) => 0.0,
        };
        let duty = self.current_step(i_ref, i);
        match self.excitation_duty {
            Some(d_e) => Action::Continuous(vec![duty, d_e]),
            None => Action::Continuous(vec![duty]),
        }
    }
}
