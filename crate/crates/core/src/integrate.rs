//! One-sampling-period ODE steps. Inputs are held constant over the period,
//! so right-hand sides are autonomous closures `f(x, dx)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase", deny_unknown_fields)]
pub enum IntegratorMethod {
    Euler,
    Rk4,
    /// Embedded Dormand–Prince 5(4) with step-size control.
    Dopri5 {
        #[serde(default = "default_rtol")]
        rtol: f64,
        #[serde(default = "default_atol")]
        atol: f64,
    },
}

fn default_rtol() -> f64 {
    1e-6
}

fn default_atol() -> f64 {
    1e-8
}

impl IntegratorMethod {
    pub fn dopri5() -> Self {
        IntegratorMethod::Dopri5 { rtol: default_rtol(), atol: default_atol() }
    }

    pub fn validate(&self) -> Result<()> {
        if let IntegratorMethod::Dopri5 { rtol, atol } = *self {
            if !(rtol > 0.0 && atol > 0.0 && rtol.is_finite() && atol.is_finite()) {
                return Err(Error::config(format!("integrator tolerances must be > 0, got rtol={rtol} atol={atol}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorChoice {
    pub method: IntegratorMethod,
    /// Sampling time in seconds.
    pub tau: f64,
}

impl IntegratorChoice {
    pub fn new(method: IntegratorMethod, tau: f64) -> Result<Self> {
        method.validate()?;
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::config(format!("sampling time must be > 0, got {tau}")));
        }
        Ok(Self { method, tau })
    }
}

/// Advances `state` by exactly one sampling period.
pub fn step_ode<F>(choice: &IntegratorChoice, mut rhs: F, state: &[f64]) -> Result<Vec<f64>>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let out = match choice.method {
        IntegratorMethod::Euler => euler(&mut rhs, state, choice.tau),
        IntegratorMethod::Rk4 => rk4(&mut rhs, state, choice.tau),
        IntegratorMethod::Dopri5 { rtol, atol } => dopri5(&mut rhs, state, choice.tau, rtol, atol)?,
    };
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("integration produced a non-finite state"));
    }
    Ok(out)
}

fn axpy(x: &[f64], h: f64, terms: &[(f64, &[f64])], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o = x[i] + h * acc;
    }
}

fn euler<F: FnMut(&[f64], &mut [f64])>(rhs: &mut F, x: &[f64], h: f64) -> Vec<f64> {
    let mut k = vec![0.0; x.len()];
    rhs(x, &mut k);
    x.iter().zip(&k).map(|(xi, ki)| xi + h * ki).collect()
}

fn rk4<F: FnMut(&[f64], &mut [f64])>(rhs: &mut F, x: &[f64], h: f64) -> Vec<f64> {
    let n = x.len();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    rhs(x, &mut k1);
    axpy(x, 0.5 * h, &[(1.0, &k1)], &mut tmp);
    rhs(&tmp, &mut k2);
    axpy(x, 0.5 * h, &[(1.0, &k2)], &mut tmp);
    rhs(&tmp, &mut k3);
    axpy(x, h, &[(1.0, &k3)], &mut tmp);
    rhs(&tmp, &mut k4);
    axpy(x, h / 6.0, &[(1.0, &k1), (2.0, &k2), (2.0, &k3), (1.0, &k4)], &mut tmp);
    tmp
}

// Dormand–Prince 5(4) tableau; stage times are not needed for autonomous systems.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// 5th minus 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const MAX_DOPRI_STEPS: usize = 100_000;

fn dopri5<F: FnMut(&[f64], &mut [f64])>(rhs: &mut F, x0: &[f64], span: f64, rtol: f64, atol: f64) -> Result<Vec<f64>> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut t = 0.0;
    let mut h = span;
    let h_min = span * 1e-12;
    rhs(&x, &mut k[0]);

    for _ in 0..MAX_DOPRI_STEPS {
        let remaining = span - t;
        if remaining <= span * 1e-14 {
            return Ok(x);
        }
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        axpy(&x, h, &[(A21, &k[0])], &mut tmp);
        rhs(&tmp, &mut k[1]);
        axpy(&x, h, &[(A31, &k[0]), (A32, &k[1])], &mut tmp);
        rhs(&tmp, &mut k[2]);
        axpy(&x, h, &[(A41, &k[0]), (A42, &k[1]), (A43, &k[2])], &mut tmp);
        rhs(&tmp, &mut k[3]);
        axpy(&x, h, &[(A51, &k[0]), (A52, &k[1]), (A53, &k[2]), (A54, &k[3])], &mut tmp);
        rhs(&tmp, &mut k[4]);
        axpy(&x, h, &[(A61, &k[0]), (A62, &k[1]), (A63, &k[2]), (A64, &k[3]), (A65, &k[4])], &mut tmp);
        rhs(&tmp, &mut k[5]);
        axpy(&x, h, &[(B1, &k[0]), (B3, &k[2]), (B4, &k[3]), (B5, &k[4]), (B6, &k[5])], &mut x_new);
        rhs(&x_new, &mut k[6]);

        let mut err_sq = 0.0;
        for i in 0..n {
            let e = h * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
            let sc = atol + rtol * x[i].abs().max(x_new[i].abs());
            err_sq += (e / sc).powi(2);
        }
        let err = (err_sq / n.max(1) as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::numerical(format!("non-finite error estimate at t={t:e} with h={h:e}")));
        }

        if err <= 1.0 {
            t = if last { span } else { t + h };
            std::mem::swap(&mut x, &mut x_new);
            k.swap(0, 6); // first-same-as-last
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            if h < h_min {
                return Err(Error::numerical(format!(
                    "step size fell below {h_min:e} at t={t:e} (error ratio {err:.3e})"
                )));
            }
        }
    }
    Err(Error::numerical(format!("dopri5 exceeded {MAX_DOPRI_STEPS} substeps within one sampling period")))
}
