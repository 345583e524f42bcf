use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use statrs::function::gamma::gamma;

use super::{sample_exponential_ppp, sample_lifetime, SamplingError};

/// Default truncation level of the Poisson-series sampler.
///
/// About `e^{6√2} ≈ 4844` atoms lie above it. The mass of the discarded atoms
/// is replaced by its expectation, which leaves a residual of standard
/// deviation below `1e-3` for `alpha <= 0.9`.
pub const DEFAULT_SERIES_FLOOR: f64 = -6.0;

/// One-sided α-stable law with Laplace transform `exp(-scale·Γ(1-α)·λ^α)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StableSpec {
    alpha: f64,
    scale: f64,
}

impl StableSpec {
    pub fn new(alpha: f64, scale: f64) -> Result<Self, SamplingError> {
        if !(alpha > 0.0 && alpha < 1.0) || !(scale > 0.0 && scale.is_finite()) {
            return Err(SamplingError::InvalidStable { alpha, scale });
        }
        Ok(Self { alpha, scale })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `E[e^{-λS}]`.
    pub fn laplace_transform(&self, lambda: f64) -> f64 {
        (-self.scale * gamma(1.0 - self.alpha) * lambda.powf(self.alpha)).exp()
    }
}

/// How to draw a positive stable variable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StableMethod {
    /// `Σ_i e^{β p_i}` over the atoms `p_i` of the `√2 e^{-√2x}dx` process
    /// above `floor`, with `β = √2/α`, plus the expected contribution of the
    /// atoms below the floor.
    Series { floor: f64 },
    /// Kanter's representation
    /// `sin(αU)/sin(U)^{1/α} · (sin((1-α)U)/E)^{(1-α)/α}`.
    Direct,
}

impl Default for StableMethod {
    fn default() -> Self {
        StableMethod::Direct
    }
}

pub fn sample_stable_positive<R: Rng + ?Sized>(
    spec: &StableSpec,
    method: StableMethod,
    rng: &mut R,
) -> f64 {
    let alpha = spec.alpha;
    match method {
        StableMethod::Series { floor } => {
            // Unit-scale series: Laplace transform exp(-Γ(1-α) λ^α).
            let beta = SQRT_2 / alpha;
            let atoms = sample_exponential_ppp(floor, rng);
            let head: f64 = atoms.iter().map(|&p| (beta * p).exp()).sum();
            // ∫_{-∞}^{floor} e^{βx} √2 e^{-√2x} dx
            let tail = SQRT_2 * ((beta - SQRT_2) * floor).exp() / (beta - SQRT_2);
            spec.scale.powf(1.0 / alpha) * (head + tail)
        }
        StableMethod::Direct => {
            // Unit-exponent draw: Laplace transform exp(-λ^α).
            let u = loop {
                let u: f64 = rng.random::<f64>() * PI;
                if u > 0.0 {
                    break u;
                }
            };
            let e = sample_lifetime(rng);
            let s = (alpha * u).sin() / u.sin().powf(1.0 / alpha)
                * (((1.0 - alpha) * u).sin() / e).powf((1.0 - alpha) / alpha);
            (spec.scale * gamma(1.0 - alpha)).powf(1.0 / alpha) * s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::ks_two_sample;
    use crate::sampling::RngStream;

    fn draws(spec: &StableSpec, method: StableMethod, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = RngStream::new(seed, 0);
        (0..n).map(|_| sample_stable_positive(spec, method, &mut rng)).collect()
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(StableSpec::new(1.0, 1.0).is_err());
        assert!(StableSpec::new(0.0, 1.0).is_err());
        assert!(StableSpec::new(0.5, 0.0).is_err());
        assert!(StableSpec::new(0.5, f64::NAN).is_err());
    }

    #[test]
    fn series_and_direct_agree() {
        let spec = StableSpec::new(0.7, 1.0).unwrap();
        let a = draws(&spec, StableMethod::Series { floor: DEFAULT_SERIES_FLOOR }, 20_000, 1);
        let b = draws(&spec, StableMethod::Direct, 20_000, 2);
        let ks = ks_two_sample(&a, &b);
        assert!(ks.p_value > 0.01, "{ks:?}");
    }

    #[test]
    fn laplace_transform_at_one() {
        let spec = StableSpec::new(0.5, 1.0).unwrap();
        let n = 400_000;
        let xs: Vec<f64> = draws(&spec, StableMethod::Direct, n, 3)
            .into_iter()
            .map(|s| (-s).exp())
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let expected = (-gamma(0.5)).exp();
        assert!((expected - 0.1699).abs() < 1e-4);
        assert!((spec.laplace_transform(1.0) - expected).abs() < 1e-15);
        assert!((mean - expected).abs() < 4.0 * (var / n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn scale_enters_through_the_laplace_exponent() {
        let spec = StableSpec::new(0.6, 2.5).unwrap();
        let n = 200_000;
        let lambda = 0.8;
        let xs: Vec<f64> = draws(&spec, StableMethod::Direct, n, 4)
            .into_iter()
            .map(|s| (-lambda * s).exp())
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let expected = spec.laplace_transform(lambda);
        assert!((mean - expected).abs() < 4.0 * (var / n as f64).sqrt());
    }

    #[test]
    fn stability_under_summation() {
        let alpha = 0.7;
        let spec = StableSpec::new(alpha, 1.0).unwrap();
        let n = 50_000;
        let pairs = draws(&spec, StableMethod::Direct, 2 * n, 5);
        let sums: Vec<f64> = pairs
            .chunks(2)
            .map(|c| (c[0] + c[1]) * 2f64.powf(-1.0 / alpha))
            .collect();
        let single = draws(&spec, StableMethod::Direct, n, 6);
        let ks = ks_two_sample(&sums, &single);
        assert!(ks.p_value > 0.01, "{ks:?}");
    }
}
