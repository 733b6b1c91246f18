//! Small statistics used when reading sweep results.

use statrs::function::erf::erfc;

/// Gaussian tail `Q(x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Bit error rate of Gray 4-QAM with unit symbol energy over AWGN.
pub fn qam4_awgn_ber(snr_db: f64) -> f64 {
    q_function(10f64.powf(snr_db / 10.0).sqrt())
}

/// Wilson score interval for `errors` successes out of `trials`.
pub fn wilson_interval(errors: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// SNR at which a BER curve crosses `target`, interpolating `log10(ber)`
/// linearly between the bracketing points. `points` must be sorted by SNR.
/// Returns `None` when the curve never crosses the target.
pub fn snr_at_ber(points: &[(f64, f64)], target: f64) -> Option<f64> {
    let lt = target.log10();
    for w in points.windows(2) {
        let ((s0, b0), (s1, b1)) = (w[0], w[1]);
        if b0 >= target && b1 <= target {
            if b1 <= 0.0 {
                return Some(s1);
            }
            let (l0, l1) = (b0.log10(), b1.log10());
            if l0 == l1 {
                return Some(s0);
            }
            return Some(s0 + (lt - l0) / (l1 - l0) * (s1 - s0));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_reference_values() {
        assert!((q_function(0.0) - 0.5).abs() < 1e-15);
        assert!((q_function(3.0) - 1.3498980316301e-3).abs() < 1e-12);
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(50, 10_000, 1.96);
        assert!(lo < 5e-3 && hi > 5e-3);
        assert!(hi - lo < 3e-3);
        let (lo0, hi0) = wilson_interval(0, 1000, 1.96);
        assert_eq!(lo0, 0.0);
        assert!(hi0 > 0.0 && hi0 < 5e-3);
    }

    #[test]
    fn interpolation() {
        let pts = [(0.0, 1e-1), (10.0, 1e-3), (20.0, 1e-5)];
        assert!((snr_at_ber(&pts, 1e-2).unwrap() - 5.0).abs() < 1e-12);
        assert!((snr_at_ber(&pts, 1e-4).unwrap() - 15.0).abs() < 1e-12);
        assert!(snr_at_ber(&pts, 1e-6).is_none());
        assert_eq!(snr_at_ber(&[(0.0, 1e-2), (3.0, 0.0)], 1e-3), Some(3.0));
    }
}
