//! Physical drive models: motor ODE right-hand sides, torque equations,
//! the mechanical load and the environment state vector assembly.
//!
//! Internal ODE states per motor:
//!
//! | motor  | state                      | inputs            |
//! |--------|----------------------------|-------------------|
//! | extex  | `(i_A, i_E, ω)`            | `(u_A, u_E)`      |
//! | shunt  | `(i_A, i_E, ω)`            | `u`               |
//! | series | `(i, ω)`                   | `u`               |
//! | permex | `(i, ω)`                   | `u`               |
//! | pmsm   | `(i_sd, i_sq, ω_me, ε_me)` | `(u_a, u_b, u_c)` |

pub mod load;
pub mod transforms;

use std::f64::consts::TAU;
use std::fmt;
use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use load::{load_torque, LoadParams};

/// Motor family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MotorKind {
    #[serde(rename = "extex")]
    ExternallyExcited,
    Shunt,
    Series,
    #[serde(rename = "permex")]
    PermanentlyExcited,
    Pmsm,
}

impl MotorKind {
    pub const ALL: [MotorKind; 5] = [
        MotorKind::ExternallyExcited,
        MotorKind::Shunt,
        MotorKind::Series,
        MotorKind::PermanentlyExcited,
        MotorKind::Pmsm,
    ];

    /// Short identifier used in environment ids, e.g. `series` in `series-cont-v0`.
    pub fn id(self) -> &'static str {
        match self {
            MotorKind::ExternallyExcited => "extex",
            MotorKind::Shunt => "shunt",
            MotorKind::Series => "series",
            MotorKind::PermanentlyExcited => "permex",
            MotorKind::Pmsm => "pmsm",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.id() == id)
    }

    pub fn is_dc(self) -> bool {
        self != MotorKind::Pmsm
    }

    /// Physical quantities exposed to the agent, in observation order.
    pub fn entries(self) -> &'static [EntrySpec] {
        use Quantity::*;
        const fn e(name: &'static str, quantity: Quantity) -> EntrySpec {
            EntrySpec { name, quantity }
        }
        const EXTEX: &[EntrySpec] = &[
            e("omega", Speed),
            e("torque", Torque),
            e("i_a", Current),
            e("i_e", Current),
            e("u_a", Voltage),
            e("u_e", Voltage),
            e("u_sup", SupplyVoltage),
        ];
        const SHUNT: &[EntrySpec] = &[
            e("omega", Speed),
            e("torque", Torque),
            e("i_a", Current),
            e("i_e", Current),
            e("u", Voltage),
            e("u_sup", SupplyVoltage),
        ];
        const SINGLE: &[EntrySpec] =
            &[e("omega", Speed), e("torque", Torque), e("i", Current), e("u", Voltage), e("u_sup", SupplyVoltage)];
        const PMSM: &[EntrySpec] = &[
            e("omega", Speed),
            e("torque", Torque),
            e("i_a", Current),
            e("i_b", Current),
            e("i_c", Current),
            e("u_a", Voltage),
            e("u_b", Voltage),
            e("u_c", Voltage),
            e("u_sup", SupplyVoltage),
            e("epsilon", Angle),
        ];
        match self {
            MotorKind::ExternallyExcited => EXTEX,
            MotorKind::Shunt => SHUNT,
            MotorKind::Series | MotorKind::PermanentlyExcited => SINGLE,
            MotorKind::Pmsm => PMSM,
        }
    }

    /// Index of `name` within [`MotorKind::entries`].
    pub fn entry_index(self, name: &str) -> Option<usize> {
        self.entries().iter().position(|e| e.name == name)
    }

    pub fn state_len(self) -> usize {
        match self {
            MotorKind::ExternallyExcited | MotorKind::Shunt => 3,
            MotorKind::Series | MotorKind::PermanentlyExcited => 2,
            MotorKind::Pmsm => 4,
        }
    }

    pub fn input_len(self) -> usize {
        match self {
            MotorKind::ExternallyExcited => 2,
            MotorKind::Pmsm => 3,
            _ => 1,
        }
    }
}

impl fmt::Display for MotorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Physical category of an environment state entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Speed,
    Torque,
    Current,
    Voltage,
    SupplyVoltage,
    Angle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntrySpec {
    pub name: &'static str,
    pub quantity: Quantity,
}

/// Parameters shared by all DC motor variants. Fields that a variant does
/// not use (e.g. `psi_e_prime` outside the permanently excited motor) are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DcMotorParams {
    /// Armature resistance (Ω).
    pub r_a: f64,
    /// Excitation resistance (Ω).
    pub r_e: f64,
    /// Armature inductance (H).
    pub l_a: f64,
    /// Excitation inductance (H).
    pub l_e: f64,
    /// Effective excitation inductance (H).
    pub l_e_prime: f64,
    /// Effective excitation flux (V·s), permanently excited motor only.
    pub psi_e_prime: f64,
    /// Rotor inertia (kg·m²).
    pub j_rotor: f64,
}

impl DcMotorParams {
    /// Series motor parameter set used by the speed-control example
    /// (`J_rotor` given as 17 g·m²).
    pub const SERIES_EXAMPLE: DcMotorParams = DcMotorParams {
        r_a: 2.78,
        r_e: 1.0,
        l_a: 6.3e-3,
        l_e: 1.6e-3,
        l_e_prime: 0.5e-3,
        psi_e_prime: 0.0,
        j_rotor: 0.017,
    };

    fn validate(&self, kind: MotorKind) -> Result<()> {
        let mut checks = vec![("r_a", self.r_a), ("l_a", self.l_a), ("j_rotor", self.j_rotor)];
        if kind == MotorKind::PermanentlyExcited {
            if !(self.psi_e_prime.is_finite() && self.psi_e_prime >= 0.0) {
                return Err(Error::config(format!("psi_e_prime must be >= 0, got {}", self.psi_e_prime)));
            }
        } else {
            checks.extend([("r_e", self.r_e), ("l_e", self.l_e), ("l_e_prime", self.l_e_prime)]);
        }
        for (name, v) in checks {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("motor parameter {name} must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmsmParams {
    /// Stator resistance (Ω).
    pub r_s: f64,
    /// Direct axis inductance (H).
    pub l_d: f64,
    /// Quadrature axis inductance (H).
    pub l_q: f64,
    /// Pole pair count.
    pub p: u32,
    /// Permanent linked rotor flux (V·s).
    pub psi_p: f64,
    /// Rotor inertia (kg·m²).
    pub j_rotor: f64,
}

impl PmsmParams {
    fn validate(&self) -> Result<()> {
        for (name, v) in [("r_s", self.r_s), ("l_d", self.l_d), ("l_q", self.l_q), ("j_rotor", self.j_rotor)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("motor parameter {name} must be finite and > 0, got {v}")));
            }
        }
        if self.p < 1 {
            return Err(Error::config("pole pair count p must be >= 1"));
        }
        if !(self.psi_p.is_finite() && self.psi_p >= 0.0) {
            return Err(Error::config(format!("psi_p must be >= 0, got {}", self.psi_p)));
        }
        Ok(())
    }
}

impl Default for PmsmParams {
    fn default() -> Self {
        Self { r_s: 18e-3, l_d: 0.37e-3, l_q: 1.2e-3, p: 3, psi_p: 66e-3, j_rotor: 0.03883 }
    }
}

/// A motor family together with its physical parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum MotorModel {
    #[serde(rename = "extex")]
    ExternallyExcited(DcMotorParams),
    #[serde(rename = "shunt")]
    Shunt(DcMotorParams),
    #[serde(rename = "series")]
    Series(DcMotorParams),
    #[serde(rename = "permex")]
    PermanentlyExcited(DcMotorParams),
    #[serde(rename = "pmsm")]
    Pmsm(PmsmParams),
}

impl MotorModel {
    /// Default parameter set for each motor family.
    pub fn default_for(kind: MotorKind) -> Self {
        let series = DcMotorParams::SERIES_EXAMPLE;
        match kind {
            MotorKind::Series => MotorModel::Series(series),
            MotorKind::ExternallyExcited => MotorModel::ExternallyExcited(series),
            // The excitation winding sits directly on the supply, so it needs a
            // resistance that keeps i_E near its nominal value at full voltage.
            MotorKind::Shunt => MotorModel::Shunt(DcMotorParams { r_e: 42.0, l_e: 0.16, l_e_prime: 0.05, ..series }),
            MotorKind::PermanentlyExcited => {
                MotorModel::PermanentlyExcited(DcMotorParams { psi_e_prime: 0.165, ..series })
            }
            MotorKind::Pmsm => MotorModel::Pmsm(PmsmParams::default()),
        }
    }

    pub fn kind(&self) -> MotorKind {
        match self {
            MotorModel::ExternallyExcited(_) => MotorKind::ExternallyExcited,
            MotorModel::Shunt(_) => MotorKind::Shunt,
            MotorModel::Series(_) => MotorKind::Series,
            MotorModel::PermanentlyExcited(_) => MotorKind::PermanentlyExcited,
            MotorModel::Pmsm(_) => MotorKind::Pmsm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MotorModel::Pmsm(p) => p.validate(),
            MotorModel::ExternallyExcited(p)
            | MotorModel::Shunt(p)
            | MotorModel::Series(p)
            | MotorModel::PermanentlyExcited(p) => p.validate(self.kind()),
        }
    }

    pub fn dc_params(&self) -> Option<&DcMotorParams> {
        match self {
            MotorModel::Pmsm(_) => None,
            MotorModel::ExternallyExcited(p)
            | MotorModel::Shunt(p)
            | MotorModel::Series(p)
            | MotorModel::PermanentlyExcited(p) => Some(p),
        }
    }

    pub fn pole_pairs(&self) -> u32 {
        match self {
            MotorModel::Pmsm(p) => p.p,
            _ => 1,
        }
    }

    pub fn rotor_inertia(&self) -> f64 {
        match self {
            MotorModel::Pmsm(p) => p.j_rotor,
            MotorModel::ExternallyExcited(p)
            | MotorModel::Shunt(p)
            | MotorModel::Series(p)
            | MotorModel::PermanentlyExcited(p) => p.j_rotor,
        }
    }

    /// Rigidly coupled rotor and load inertia.
    pub fn total_inertia(&self, load: &LoadParams) -> f64 {
        self.rotor_inertia() + load.j_load
    }

    /// Position of the mechanical speed in the ODE state.
    pub fn speed_index(&self) -> usize {
        match self.kind() {
            MotorKind::ExternallyExcited | MotorKind::Shunt | MotorKind::Pmsm => 2,
            MotorKind::Series | MotorKind::PermanentlyExcited => 1,
        }
    }

    /// Air-gap torque of the motor at `state`.
    pub fn torque(&self, state: &[f64]) -> f64 {
        match self {
            MotorModel::ExternallyExcited(p) | MotorModel::Shunt(p) => p.l_e_prime * state[1] * state[0],
            MotorModel::Series(p) => p.l_e_prime * state[0] * state[0],
            MotorModel::PermanentlyExcited(p) => p.psi_e_prime * state[0],
            MotorModel::Pmsm(p) => {
                let (i_sd, i_sq) = (state[0], state[1]);
                1.5 * p.p as f64 * (p.psi_p + (p.l_d - p.l_q) * i_sd) * i_sq
            }
        }
    }

    /// Writes `d state / dt` into `out` without dimension checks; see
    /// [`motor_derivative`] for the checked entry point.
    pub fn derivative_into(&self, state: &[f64], u_in: &[f64], load: &LoadParams, out: &mut [f64]) {
        let j = self.total_inertia(load);
        match self {
            MotorModel::ExternallyExcited(p) => {
                let (i_a, i_e, omega) = (state[0], state[1], state[2]);
                out[0] = (u_in[0] - p.l_e_prime * i_e * omega - p.r_a * i_a) / p.l_a;
                out[1] = (u_in[1] - p.r_e * i_e) / p.l_e;
                out[2] = (p.l_e_prime * i_e * i_a - load.torque(omega)) / j;
            }
            MotorModel::Shunt(p) => {
                let (i_a, i_e, omega) = (state[0], state[1], state[2]);
                let u = u_in[0];
                out[0] = (u - p.l_e_prime * i_e * omega - p.r_a * i_a) / p.l_a;
                out[1] = (u - p.r_e * i_e) / p.l_e;
                out[2] = (p.l_e_prime * i_e * i_a - load.torque(omega)) / j;
            }
            MotorModel::Series(p) => {
                let (i, omega) = (state[0], state[1]);
                out[0] = (-p.l_e_prime * i * omega - (p.r_a + p.r_e) * i + u_in[0]) / (p.l_a + p.l_e);
                out[1] = (p.l_e_prime * i * i - load.torque(omega)) / j;
            }
            MotorModel::PermanentlyExcited(p) => {
                let (i, omega) = (state[0], state[1]);
                out[0] = (-p.psi_e_prime * omega - p.r_a * i + u_in[0]) / p.l_a;
                out[1] = (p.psi_e_prime * i - load.torque(omega)) / j;
            }
            MotorModel::Pmsm(p) => {
                let (i_sd, i_sq, omega_me, eps_me) = (state[0], state[1], state[2], state[3]);
                let pp = p.p as f64;
                let [u_sd, u_sq] = transforms::abc_to_dq([u_in[0], u_in[1], u_in[2]], pp * eps_me);
                let omega = pp * omega_me;
                out[0] = (u_sd - p.r_s * i_sd + p.l_q * omega * i_sq) / p.l_d;
                out[1] = (u_sq - p.r_s * i_sq - omega * (p.l_d * i_sd + p.psi_p)) / p.l_q;
                out[2] = (self.torque(state) - load.torque(omega_me)) / j;
                out[3] = omega_me;
            }
        }
    }

    /// Normalizes cyclic states after an integration step (`ε_me` into `[0, 2π)`).
    pub fn wrap_state(&self, state: &mut [f64]) {
        if let MotorModel::Pmsm(_) = self {
            state[3] = wrap_angle(state[3]);
        }
    }

    /// Current seen by each converter channel, used for interlocking distortion.
    pub fn channel_currents(&self, state: &[f64]) -> Vec<f64> {
        match self {
            MotorModel::ExternallyExcited(_) => vec![state[0], state[1]],
            MotorModel::Shunt(_) => vec![state[0] + state[1]],
            MotorModel::Series(_) | MotorModel::PermanentlyExcited(_) => vec![state[0]],
            MotorModel::Pmsm(p) => {
                transforms::dq_to_abc([state[0], state[1]], p.p as f64 * state[3]).to_vec()
            }
        }
    }

    /// Builds an ODE state from a physical environment state vector
    /// (the inverse of [`env_state_vector`] on the state entries).
    pub fn state_from_env_vector(&self, env: &[f64]) -> MotorState {
        match self {
            MotorModel::ExternallyExcited(_) | MotorModel::Shunt(_) => MotorState(vec![env[2], env[3], env[0]]),
            MotorModel::Series(_) | MotorModel::PermanentlyExcited(_) => MotorState(vec![env[2], env[0]]),
            MotorModel::Pmsm(p) => {
                let pp = p.p as f64;
                let eps = env[9];
                let [alpha, beta, _] = transforms::clarke_forward([env[2], env[3], env[4]]);
                let [i_sd, i_sq] = transforms::park_forward([alpha, beta], eps);
                MotorState(vec![i_sd, i_sq, env[0] / pp, wrap_angle(eps / pp)])
            }
        }
    }
}

pub(crate) fn wrap_angle(x: f64) -> f64 {
    let w = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

macro_rules! vec_newtype {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub Vec<f64>);

        impl Deref for $name {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl DerefMut for $name {
            fn deref_mut(&mut self) -> &mut [f64] {
                &mut self.0
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                Self(v)
            }
        }
    };
}

vec_newtype!(
    /// Internal ODE state of a motor; layout depends on [`MotorKind`].
    MotorState
);
vec_newtype!(
    /// Physical quantities exposed to the agent, ordered as [`MotorKind::entries`].
    EnvStateVector
);

fn check_dims(model: &MotorModel, state: &[f64], u_in: &[f64]) -> Result<()> {
    let kind = model.kind();
    if state.len() != kind.state_len() {
        return Err(Error::config(format!(
            "{kind} state has {} entries, expected {}",
            state.len(),
            kind.state_len()
        )));
    }
    if u_in.len() != kind.input_len() {
        return Err(Error::config(format!(
            "{kind} takes {} input voltages, got {}",
            kind.input_len(),
            u_in.len()
        )));
    }
    Ok(())
}

/// Time derivative of the motor state under input voltages `u_in`.
pub fn motor_derivative(model: &MotorModel, state: &[f64], u_in: &[f64], load: &LoadParams) -> Result<MotorState> {
    check_dims(model, state, u_in)?;
    if state.iter().chain(u_in).any(|v| !v.is_finite()) {
        return Err(Error::numerical("non-finite motor state or input"));
    }
    let mut out = vec![0.0; state.len()];
    model.derivative_into(state, u_in, load, &mut out);
    Ok(MotorState(out))
}

/// Motor torque; fails only for non-finite state entries.
pub fn torque(model: &MotorModel, state: &[f64]) -> Result<f64> {
    if state.len() != model.kind().state_len() {
        return Err(Error::config("state dimension does not match motor"));
    }
    if state.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("non-finite motor state"));
    }
    Ok(model.torque(state))
}

/// Assembles the physical environment state vector. For the PMSM the `dq`
/// currents are mapped to phase currents at `ε = p·ε_me`, and `ω`, `ε` are
/// electrical quantities.
pub fn env_state_vector(model: &MotorModel, state: &[f64], u_in: &[f64], u_sup: f64) -> Result<EnvStateVector> {
    check_dims(model, state, u_in)?;
    let t = model.torque(state);
    let v = match model {
        MotorModel::ExternallyExcited(_) => vec![state[2], t, state[0], state[1], u_in[0], u_in[1], u_sup],
        MotorModel::Shunt(_) => vec![state[2], t, state[0], state[1], u_in[0], u_sup],
        MotorModel::Series(_) | MotorModel::PermanentlyExcited(_) => vec![state[1], t, state[0], u_in[0], u_sup],
        MotorModel::Pmsm(p) => {
            let pp = p.p as f64;
            let eps = wrap_angle(pp * state[3]);
            let [i_a, i_b, i_c] = transforms::dq_to_abc([state[0], state[1]], eps);
            vec![pp * state[2], t, i_a, i_b, i_c, u_in[0], u_in[1], u_in[2], u_sup, eps]
        }
    };
    Ok(EnvStateVector(v))
}
