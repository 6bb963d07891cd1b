//! Normalization scales and the limit observer.

use std::f64::consts::TAU;

use crate::converter::Topology;
use crate::drive::{MotorKind, Quantity};

/// Per-entry normalization of an environment state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    /// Nominal values `x_N`.
    pub nominal: Vec<f64>,
    /// Hard limits `ξ·x_N`; the angle uses the fixed scale `2π`.
    pub limits: Vec<f64>,
    /// Entries whose physical value cannot be negative for the topology.
    pub nonnegative: Vec<bool>,
    /// Entries never checked against their limit (`u_sup`, `ε`).
    pub exempt: Vec<bool>,
}

impl Normalization {
    /// `nominal` must be ordered like `kind.entries()`; the angle slot is ignored.
    pub fn new(kind: MotorKind, topology: Topology, nominal: Vec<f64>, safety_margin: f64) -> Self {
        let entries = kind.entries();
        let unipolar_voltage = matches!(topology, Topology::OneQuadrant | Topology::TwoQuadrant);
        let unipolar_current = topology == Topology::OneQuadrant;
        // the series motor torque grows with i², it cannot drive backwards
        let unipolar_torque = unipolar_current || kind == MotorKind::Series;
        let mut limits = Vec::with_capacity(entries.len());
        let mut nonnegative = Vec::with_capacity(entries.len());
        let mut exempt = Vec::with_capacity(entries.len());
        for (e, &x_n) in entries.iter().zip(&nominal) {
            limits.push(if e.quantity == Quantity::Angle { TAU } else { safety_margin * x_n });
            nonnegative.push(match e.quantity {
                Quantity::Speed | Quantity::Torque => unipolar_torque,
                Quantity::Current => unipolar_current,
                Quantity::Voltage => unipolar_voltage,
                Quantity::SupplyVoltage | Quantity::Angle => true,
            });
            exempt.push(matches!(e.quantity, Quantity::SupplyVoltage | Quantity::Angle));
        }
        Self { nominal, limits, nonnegative, exempt }
    }

    pub fn len(&self) -> usize {
        self.limits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.limits.is_empty()
    }

    /// Width of the normalized range of entry `k`: 1 for `[0, 1]`, 2 for `[−1, 1]`.
    pub fn width(&self, k: usize) -> f64 {
        if self.nonnegative[k] {
            1.0
        } else {
            2.0
        }
    }

    pub fn widths(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.width(k)).collect()
    }

    /// Normalized codomain of entry `k`.
    pub fn bounds(&self, k: usize) -> (f64, f64) {
        if self.nonnegative[k] {
            (0.0, 1.0)
        } else {
            (-1.0, 1.0)
        }
    }

    pub fn normalize(&self, k: usize, value: f64) -> f64 {
        normalize(value, self.limits[k])
    }

    pub fn normalize_all(&self, values: &[f64]) -> Vec<f64> {
        values.iter().zip(&self.limits).map(|(v, l)| normalize(*v, *l)).collect()
    }

    /// Index of the first entry beyond its limit.
    pub fn check(&self, values: &[f64]) -> Option<usize> {
        limit_check(values, &self.limits, &self.exempt)
    }
}

pub fn normalize(value: f64, limit: f64) -> f64 {
    value / limit
}

/// Index of the first non-exempt entry with `|x| > limit` (strict).
/// Non-finite values always count as a violation.
pub fn limit_check(values: &[f64], limits: &[f64], exempt: &[bool]) -> Option<usize> {
    values
        .iter()
        .zip(limits)
        .zip(exempt)
        .position(|((v, l), ex)| !ex && (v.is_nan() || v.abs() > *l))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_examples() {
        let limit = 1.3 * 368.0;
        assert!((normalize(239.2, limit) - 0.5).abs() < 1e-15);
        assert_eq!(normalize(limit, limit), 1.0);
        assert_eq!(normalize(0.0, limit), 0.0);
    }

    #[test]
    fn current_limit_example() {
        let norm = Normalization::new(
            MotorKind::Series,
            Topology::OneQuadrant,
            vec![368.0, 250.0, 50.0, 420.0, 420.0],
            1.2,
        );
        assert_eq!(norm.check(&[0.0, 0.0, 60.1, 0.0, 420.0]), Some(2));
        assert_eq!(norm.check(&[0.0, 0.0, 59.9, 0.0, 420.0]), None);
        let at_limit: Vec<f64> = norm.limits.clone();
        assert_eq!(norm.check(&at_limit), None);
        // supply voltage is exempt
        assert_eq!(norm.check(&[0.0, 0.0, 0.0, 0.0, 1e6]), None);
    }

    #[test]
    fn angle_is_exempt() {
        let mut nominal = vec![942.0, 30.0, 100.0, 100.0, 100.0, 150.0, 150.0, 150.0, 300.0, 0.0];
        nominal[9] = f64::NAN;
        let norm = Normalization::new(MotorKind::Pmsm, Topology::B6, nominal, 1.0);
        let mut v = vec![0.0; 10];
        v[9] = 6.0;
        assert_eq!(norm.check(&v), None);
        assert!(norm.normalize(9, 6.0) < 1.0);
    }

    #[test]
    fn non_finite_counts_as_violation() {
        assert_eq!(limit_check(&[f64::NAN], &[1.0], &[false]), Some(0));
    }

    #[test]
    fn polarity_follows_topology() {
        let nominal = vec![1.0; 5];
        let one = Normalization::new(MotorKind::PermanentlyExcited, Topology::OneQuadrant, nominal.clone(), 1.0);
        assert!(one.nonnegative.iter().all(|&b| b));
        let two = Normalization::new(MotorKind::PermanentlyExcited, Topology::TwoQuadrant, nominal.clone(), 1.0);
        assert_eq!(two.nonnegative, vec![false, false, false, true, true]);
        let four = Normalization::new(MotorKind::Series, Topology::FourQuadrant, nominal, 1.0);
        assert_eq!(four.nonnegative, vec![true, true, false, false, true]);
    }
}
