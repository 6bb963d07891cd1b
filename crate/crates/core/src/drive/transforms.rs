//! Amplitude-invariant Clarke and Park transforms between the three-phase
//! `abc` frame, the stator-fixed `αβ0` frame and the rotor-fixed `dq` frame.

const SQRT_3: f64 = 1.732_050_807_568_877_2;
const FRAC_1_SQRT_3: f64 = 0.577_350_269_189_625_8;
const FRAC_SQRT_2_3: f64 = std::f64::consts::SQRT_2 / 3.0;

/// `abc → (α, β, 0)`.
///
/// The zero component is returned for completeness; the star-connected
/// machine without neutral conductor only uses `α` and `β`.
pub fn clarke_forward(abc: [f64; 3]) -> [f64; 3] {
    let [a, b, c] = abc;
    [
        (2.0 * a - b - c) / 3.0,
        (b - c) * FRAC_1_SQRT_3,
        (a + b + c) * FRAC_SQRT_2_3,
    ]
}

/// `(α, β) → abc`, zero component assumed to vanish.
pub fn clarke_inverse(alpha_beta: [f64; 2]) -> [f64; 3] {
    let [alpha, beta] = alpha_beta;
    let half_sqrt3_beta = 0.5 * SQRT_3 * beta;
    [alpha, -0.5 * alpha + half_sqrt3_beta, -0.5 * alpha - half_sqrt3_beta]
}

/// Rotation into rotor coordinates at electrical angle `epsilon`.
pub fn park_forward(alpha_beta: [f64; 2], epsilon: f64) -> [f64; 2] {
    let [alpha, beta] = alpha_beta;
    let (sin, cos) = epsilon.sin_cos();
    [cos * alpha + sin * beta, -sin * alpha + cos * beta]
}

/// Transpose of [`park_forward`].
pub fn park_inverse(dq: [f64; 2], epsilon: f64) -> [f64; 2] {
    let [d, q] = dq;
    let (sin, cos) = epsilon.sin_cos();
    [cos * d - sin * q, sin * d + cos * q]
}

/// Phase quantities to `dq` at electrical angle `epsilon`.
pub fn abc_to_dq(abc: [f64; 3], epsilon: f64) -> [f64; 2] {
    let [alpha, beta, _] = clarke_forward(abc);
    park_forward([alpha, beta], epsilon)
}

/// `dq` quantities back to phases at electrical angle `epsilon`.
pub fn dq_to_abc(dq: [f64; 2], epsilon: f64) -> [f64; 3] {
    clarke_inverse(park_inverse(dq, epsilon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn clarke_of_balanced_unit_vector() {
        let out = clarke_forward([1.0, -0.5, -0.5]);
        assert_abs_diff_eq!(out[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out[2], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn clarke_zero_and_common_mode() {
        assert_eq!(clarke_forward([0.0; 3]), [0.0; 3]);
        let out = clarke_forward([1.0, 1.0, 1.0]);
        assert_abs_diff_eq!(out[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out[2], std::f64::consts::SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn park_identity_and_quarter_turn() {
        assert_eq!(park_forward([0.3, -0.7], 0.0), [0.3, -0.7]);
        let out = park_forward([1.0, 0.0], FRAC_PI_2);
        assert_abs_diff_eq!(out[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1], -1.0, epsilon = 1e-15);
    }

    #[test]
    fn clarke_round_trip_balanced() {
        let [alpha, beta, _] = clarke_forward([1.0, -0.5, -0.5]);
        let abc = clarke_inverse([alpha, beta]);
        assert_abs_diff_eq!(abc[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(abc[1], -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(abc[2], -0.5, epsilon = 1e-15);
    }
}
