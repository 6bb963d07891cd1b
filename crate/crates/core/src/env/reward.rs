use crate::env::config::{LimitPenalty, RewardKind};
use crate::error::{Error, Result};

/// Tracking reward on normalized quantities.
///
/// Each error is divided by the width of its entry's normalized range
/// (`2` for `[−1, 1]`, `1` for `[0, 1]`), so with weights summing to one the
/// unshifted rewards lie in `[−1, 0]` and the shifted ones in `[0, 1]`.
/// Entries with zero weight are skipped entirely.
pub fn reward(kind: RewardKind, state: &[f64], reference: &[f64], weights: &[f64], widths: &[f64]) -> f64 {
    let squared = matches!(kind, RewardKind::Wsse | RewardKind::Swsse);
    let mut sum = 0.0;
    for k in 0..weights.len() {
        let w = weights[k];
        if w == 0.0 {
            continue;
        }
        let e = (state[k] - reference[k]).abs() / widths[k];
        sum += w * if squared { e * e } else { e };
    }
    if kind.is_shifted() {
        1.0 - sum
    } else {
        -sum
    }
}

/// Reward substituted on a limit violation.
pub fn violation_penalty(mode: &LimitPenalty) -> Result<f64> {
    match *mode {
        LimitPenalty::Zero => Ok(0.0),
        LimitPenalty::Constant { value } => Ok(value),
        LimitPenalty::QBased { gamma } => {
            if gamma > 0.0 && gamma < 1.0 {
                Ok(-1.0 / (1.0 - gamma))
            } else {
                Err(Error::config(format!("discount factor gamma must lie in (0, 1), got {gamma}")))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const ALL: [RewardKind; 4] = [RewardKind::Wsae, RewardKind::Wsse, RewardKind::Swsae, RewardKind::Swsse];

    #[test]
    fn perfect_tracking() {
        let s = [0.3, -0.2, 0.9];
        for kind in ALL {
            let r = reward(kind, &s, &s, &[0.5, 0.25, 0.25], &[2.0, 2.0, 1.0]);
            assert_eq!(r, if kind.is_shifted() { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn maximal_bipolar_error() {
        assert_eq!(reward(RewardKind::Wsae, &[1.0], &[-1.0], &[1.0], &[2.0]), -1.0);
    }

    #[test]
    fn squared_hand_value() {
        // width-scaled errors (0.5, 0): -(0.5 * 0.25 + 0.5 * 0)
        let r = reward(RewardKind::Wsse, &[0.5, 0.1], &[-0.5, 0.1], &[0.5, 0.5], &[2.0, 2.0]);
        assert_relative_eq!(r, -0.125, max_relative = 1e-15);
    }

    #[test]
    fn zero_weight_ignores_nan_reference() {
        let r = reward(RewardKind::Swsae, &[0.2, 0.4], &[0.2, f64::NAN], &[1.0, 0.0], &[2.0, 2.0]);
        assert_eq!(r, 1.0);
    }

    #[test]
    fn penalties() {
        assert_eq!(violation_penalty(&LimitPenalty::Zero).unwrap(), 0.0);
        assert_eq!(violation_penalty(&LimitPenalty::Constant { value: -3.0 }).unwrap(), -3.0);
        assert_relative_eq!(violation_penalty(&LimitPenalty::QBased { gamma: 0.99 }).unwrap(), -100.0, max_relative = 1e-12);
        assert_relative_eq!(violation_penalty(&LimitPenalty::QBased { gamma: 0.9 }).unwrap(), -10.0, max_relative = 1e-12);
        assert_eq!(violation_penalty(&LimitPenalty::QBased { gamma: 0.5 }).unwrap(), -2.0);
        for gamma in [0.0, 1.0, -0.5, 1.5, f64::NAN] {
            assert!(violation_penalty(&LimitPenalty::QBased { gamma }).unwrap_err().is_config());
        }
    }
}
