use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Standard deviation of the normalized noise for noise level `rho`:
/// variance `rho / 6 / ξ²`.
pub fn noise_std(rho: f64, safety_margin: f64) -> f64 {
    (rho / 6.0).sqrt() / safety_margin
}

/// Adds independent zero-mean Gaussian noise to each normalized entry.
pub fn add_noise<R: Rng + ?Sized>(values: &mut [f64], levels: &[f64], safety_margin: f64, rng: &mut R) {
    for (v, &rho) in values.iter_mut().zip(levels) {
        if rho > 0.0 {
            *v += sample(rho, safety_margin, rng);
        }
    }
}

/// One normalized noise sample for level `rho`.
pub fn sample<R: Rng + ?Sized>(rho: f64, safety_margin: f64, rng: &mut R) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    Normal::new(0.0, noise_std(rho, safety_margin)).expect("finite std").sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_levels_leave_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut v = vec![0.1, -0.4, 0.9];
        add_noise(&mut v, &[0.0; 3], 1.3, &mut rng);
        assert_eq!(v, vec![0.1, -0.4, 0.9]);
    }

    #[test]
    fn variance_scaling() {
        assert!((noise_std(0.06, 1.0) - 0.1).abs() < 1e-15);
        assert!((noise_std(0.06, 2.0).powi(2) - 0.0025).abs() < 1e-15);
    }

    #[test]
    fn empirical_std_within_one_percent() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let x = sample(0.06, 1.0, &mut rng);
            s += x;
            s2 += x * x;
        }
        let mean = s / n as f64;
        let std = (s2 / n as f64 - mean * mean).sqrt();
        assert!((std - 0.1).abs() < 0.001, "std {std}");
    }
}
