use super::MetricsError;

/// Unbiased pass@k: the probability that a random k-subset of `n` samples,
/// `c` of them correct, contains at least one correct sample.
///
/// Evaluated as `1 - prod_{i=n-c+1}^{n} (1 - k/i)`, which avoids the huge
/// binomials of the closed form.
pub fn pass_at_k(n: u64, c: u64, k: u64) -> Result<f64, MetricsError> {
    if n == 0 {
        return Err(MetricsError::NoSamples);
    }
    if c > n {
        return Err(MetricsError::CorrectExceedsN { n, c });
    }
    if k == 0 {
        return Err(MetricsError::ZeroK);
    }
    if k > n {
        return Err(MetricsError::KGreaterThanN { n, k });
    }
    if n - c < k {
        return Ok(1.0);
    }
    if c == 0 {
        return Ok(0.0);
    }
    if k == 1 {
        return Ok(c as f64 / n as f64);
    }
    let k = k as f64;
    let miss: f64 = (n - c + 1..=n).map(|i| 1.0 - k / i as f64).product();
    Ok(1.0 - miss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Fraction of k-subsets of n samples that hit one of the first c.
    fn brute_force(n: u64, c: u64, k: u64) -> f64 {
        let correct: u32 = (1u32 << c) - 1;
        let (mut hits, mut total) = (0u64, 0u64);
        for mask in 0u32..(1u32 << n) {
            if mask.count_ones() as u64 != k {
                continue;
            }
            total += 1;
            if mask & correct != 0 {
                hits += 1;
            }
        }
        hits as f64 / total as f64
    }

    #[test]
    fn anchors() {
        assert_eq!(pass_at_k(200, 0, 10).unwrap(), 0.0);
        assert_eq!(pass_at_k(200, 200, 1).unwrap(), 1.0);
        assert_eq!(pass_at_k(5, 2, 2).unwrap(), 0.7);
        assert_eq!(pass_at_k(10, 3, 10).unwrap(), 1.0);
        assert_eq!(pass_at_k(200, 7, 1).unwrap(), 0.035);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(pass_at_k(10, 3, 11), Err(MetricsError::KGreaterThanN { n: 10, k: 11 })));
        assert!(matches!(pass_at_k(10, 11, 1), Err(MetricsError::CorrectExceedsN { .. })));
        assert!(matches!(pass_at_k(10, 1, 0), Err(MetricsError::ZeroK)));
        assert!(matches!(pass_at_k(0, 0, 1), Err(MetricsError::NoSamples)));
    }

    #[test]
    fn matches_brute_force_exhaustively() {
        for n in 1..=12 {
            for c in 0..=n {
                for k in 1..=n {
                    let fast = pass_at_k(n, c, k).unwrap();
                    let slow = brute_force(n, c, k);
                    assert!((fast - slow).abs() < 1e-9, "n={n} c={c} k={k}: {fast} vs {slow}");
                    assert_eq!(fast == 1.0, n - c < k, "n={n} c={c} k={k}");
                    assert_eq!(fast == 0.0, c == 0, "n={n} c={c} k={k}");
                }
            }
        }
    }

    #[test]
    fn large_n_stays_finite() {
        let v = pass_at_k(10_000, 37, 100).unwrap();
        assert!(v > 0.0 && v < 1.0);
    }

    proptest! {
        #[test]
        fn monotone_in_k_and_c(n in 1u64..400, c_frac in 0.0f64..=1.0, k_frac in 0.0f64..=1.0) {
            let c = ((n as f64) * c_frac).floor() as u64;
            let k = (((n as f64) * k_frac).floor() as u64).clamp(1, n);
            let v = pass_at_k(n, c, k).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
            if k < n {
                prop_assert!(pass_at_k(n, c, k + 1).unwrap() >= v - 1e-12);
            }
            if c < n {
                prop_assert!(pass_at_k(n, c + 1, k).unwrap() >= v - 1e-12);
            }
            prop_assert!((pass_at_k(n, c, 1).unwrap() - c as f64 / n as f64).abs() <= 1e-12);
            if n - c < k {
                prop_assert_eq!(v, 1.0);
            }
            prop_assert_eq!(v == 0.0, c == 0);
        }
    }
}
