use rand::Rng;

use super::SamplingError;

/// Tolerance on the normalisation and mean-two constraints.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

/// Mean and second factorial moment `K = Σ μ(k) k(k-1)` of an offspring law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OffspringMoments {
    pub mean: f64,
    pub k: f64,
}

/// Finite-support offspring distribution with mean two.
///
/// Weights are stored densely, `weights[k] = μ(k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OffspringDistribution {
    weights: Vec<f64>,
    cdf: Vec<f64>,
    moments: OffspringMoments,
    /// Set when the law is a point mass; sampling then draws nothing.
    point_mass: Option<u32>,
}

impl OffspringDistribution {
    /// Binary branching, `μ = δ₂`.
    pub fn binary() -> Self {
        Self::from_dense(vec![0.0, 0.0, 1.0]).expect("δ₂ is a valid offspring law")
    }

    /// Builds the law from `(k, μ(k))` pairs. Repeated `k` accumulate.
    pub fn new<I>(pairs: I) -> Result<Self, SamplingError>
    where
        I: IntoIterator<Item = (u32, f64)>,
    {
        let mut dense = Vec::new();
        for (k, w) in pairs {
            let k = k as usize;
            if dense.len() <= k {
                dense.resize(k + 1, 0.0);
            }
            dense[k] += w;
        }
        Self::from_dense(dense)
    }

    pub fn from_dense(mut weights: Vec<f64>) -> Result<Self, SamplingError> {
        for (k, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(SamplingError::InvalidWeight { k: k as u32, weight: w });
            }
        }
        while weights.last() == Some(&0.0) {
            weights.pop();
        }
        if weights.is_empty() {
            return Err(SamplingError::NotNormalized { sum: 0.0 });
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(SamplingError::NotNormalized { sum });
        }
        let moments = raw_moments(&weights);
        if (moments.mean - 2.0).abs() > WEIGHT_TOLERANCE {
            return Err(SamplingError::MeanNotTwo { mean: moments.mean });
        }
        let mut acc = 0.0;
        let cdf = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        let point_mass = weights
            .iter()
            .position(|&w| w == 1.0)
            .map(|k| k as u32);
        Ok(Self {
            weights,
            cdf,
            moments,
            point_mass,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, k: u32) -> f64 {
        self.weights.get(k as usize).copied().unwrap_or(0.0)
    }

    pub fn max_offspring(&self) -> u32 {
        (self.weights.len() - 1) as u32
    }

    pub fn moments(&self) -> OffspringMoments {
        self.moments
    }

    pub fn is_binary(&self) -> bool {
        self.point_mass == Some(2)
    }

    /// Probability generating function `Σ μ(k) s^k`.
    pub fn pgf(&self, s: f64) -> f64 {
        self.weights.iter().rev().fold(0.0, |acc, &w| acc * s + w)
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        if let Some(k) = self.point_mass {
            return k;
        }
        let u: f64 = rng.random();
        match self.cdf.iter().position(|&c| u < c) {
            Some(k) => k as u32,
            // u landed in the rounding gap above the final cdf value
            None => self.max_offspring(),
        }
    }
}

fn raw_moments(weights: &[f64]) -> OffspringMoments {
    let mut mean = 0.0;
    let mut k = 0.0;
    for (n, &w) in weights.iter().enumerate() {
        let n = n as f64;
        mean += n * w;
        k += n * (n - 1.0) * w;
    }
    OffspringMoments { mean, k }
}

/// Validates the raw weights and returns `(mean, K)`.
pub fn offspring_moments(weights: &[(u32, f64)]) -> Result<OffspringMoments, SamplingError> {
    OffspringDistribution::new(weights.iter().copied()).map(|d| d.moments())
}
