use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Polynomial mechanical load
/// `T_L(ω) = sign(ω)·(c·ω² + sign(ω)·b·ω + a)` with an attached inertia.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadParams {
    /// Constant load torque (N·m).
    pub a: f64,
    /// Viscous friction coefficient (N·m·s).
    pub b: f64,
    /// Aerodynamic coefficient (N·m·s²).
    pub c: f64,
    /// Load inertia (kg·m²).
    pub j_load: f64,
}

impl LoadParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("b", self.b), ("c", self.c), ("j_load", self.j_load)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(format!("load parameter {name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Load torque at mechanical speed `omega_me`.
    pub fn torque(&self, omega_me: f64) -> f64 {
        load_torque(self, omega_me)
    }
}

impl Default for LoadParams {
    fn default() -> Self {
        Self { a: 0.01, b: 0.12, c: 0.1, j_load: 1.0 }
    }
}

/// Standard signum with `signum(0) = 0`.
pub(crate) fn signum0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn load_torque(load: &LoadParams, omega_me: f64) -> f64 {
    let s = signum0(omega_me);
    s * (load.c * omega_me * omega_me + s * load.b * omega_me + load.a)
}
