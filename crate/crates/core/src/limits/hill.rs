use super::LimitError;

/// Default number of order statistics, as a fraction of the sample size.
pub const DEFAULT_HILL_FRACTION: f64 = 0.01;

/// Fractions reported in sensitivity sweeps.
pub const HILL_FRACTIONS: [f64; 3] = [0.005, 0.01, 0.02];

/// Hill estimate of the tail index from the `k` largest positive samples:
/// `k / Σ_{i=1..k} ln(X_(i) / X_(k+1))`. Non-positive samples are ignored.
pub fn hill_tail_index(samples: &[f64], k: usize) -> Result<f64, LimitError> {
    if k == 0 {
        return Err(LimitError::InvalidArgument("k must be at least 1".into()));
    }
    let mut positive: Vec<f64> = samples.iter().copied().filter(|&x| x > 0.0).collect();
    if positive.len() < k + 1 {
        return Err(LimitError::InvalidArgument(format!(
            "need at least k + 1 = {} positive samples (got {})",
            k + 1,
            positive.len()
        )));
    }
    positive.sort_by(|a, b| b.total_cmp(a));
    let threshold = positive[k];
    let spacing: f64 = positive[..k].iter().map(|&x| (x / threshold).ln()).sum();
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(LimitError::Degenerate(
            "the top order statistics are tied; log-spacings sum to zero".into(),
        ));
    }
    Ok(k as f64 / spacing)
}

/// Hill estimates at each fraction of [`HILL_FRACTIONS`] of the positive
/// sample count: `(fraction, k, estimate)`.
pub fn hill_sensitivity(samples: &[f64]) -> Vec<(f64, usize, Result<f64, LimitError>)> {
    let n = samples.iter().filter(|&&x| x > 0.0).count();
    HILL_FRACTIONS
        .iter()
        .map(|&fraction| {
            let k = ((n as f64 * fraction).round() as usize).max(1);
            (fraction, k, hill_tail_index(samples, k))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::RngStream;
    use rand::Rng;

    fn pareto(alpha: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = RngStream::new(seed, 0);
        (0..n)
            .map(|_| {
                let u: f64 = 1.0 - rng.random::<f64>();
                u.powf(-1.0 / alpha)
            })
            .collect()
    }

    #[test]
    fn recovers_pareto_index() {
        let xs = pareto(1.5, 100_000, 1);
        let est = hill_tail_index(&xs, 1000).unwrap();
        assert!((est - 1.5).abs() < 0.15, "{est}");
    }

    #[test]
    fn ties_are_degenerate() {
        let xs = vec![2.0; 50];
        assert!(matches!(hill_tail_index(&xs, 10), Err(LimitError::Degenerate(_))));
    }

    #[test]
    fn too_few_positive_samples() {
        let xs = [1.0, 2.0, -3.0, 0.0];
        assert!(matches!(hill_tail_index(&xs, 2), Err(LimitError::InvalidArgument(_))));
        assert!(hill_tail_index(&xs, 1).is_ok());
        assert!(hill_tail_index(&xs, 0).is_err());
    }

    #[test]
    fn light_tails_have_no_stable_index() {
        // exponential data has no power-law tail: the index estimate tracks the
        // threshold ln(n/k), growing without bound as fewer order statistics are used
        let mut rng = RngStream::new(2, 0);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| crate::sampling::sample_lifetime(&mut rng))
            .collect();
        let small = hill_tail_index(&xs, 100).unwrap();
        let large = hill_tail_index(&xs, 5000).unwrap();
        assert!(small > 1.5 * large, "{small} vs {large}");
    }

    #[test]
    fn sensitivity_reports_three_fractions() {
        let xs = pareto(1.0, 20_000, 3);
        let sweep = hill_sensitivity(&xs);
        assert_eq!(sweep.iter().map(|s| s.1).collect::<Vec<_>>(), vec![100, 200, 400]);
        assert!(sweep.iter().all(|s| s.2.is_ok()));
    }
}
