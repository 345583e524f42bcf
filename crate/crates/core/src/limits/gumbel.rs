use std::f64::consts::SQRT_2;

use rand::Rng;
use rand_distr::Gumbel;

use super::LimitError;
use crate::sampling::RngStream;

/// Random-shift Gumbel law `(G + ln(C·Z))/√2`, with `Z` drawn uniformly
/// from proxy samples of the derivative-martingale limit.
#[derive(Clone, Debug, PartialEq)]
pub struct GumbelMixtureSpec {
    z_samples: Vec<f64>,
    c: f64,
}

impl GumbelMixtureSpec {
    pub fn new(z_samples: Vec<f64>, c: f64) -> Result<Self, LimitError> {
        if z_samples.is_empty() {
            return Err(LimitError::InvalidArgument("z_samples is empty".into()));
        }
        if let Some(z) = z_samples.iter().find(|z| !(**z > 0.0 && z.is_finite())) {
            return Err(LimitError::InvalidArgument(format!(
                "z_samples must be positive and finite (got {z})"
            )));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(LimitError::InvalidArgument(format!("C must be positive (got {c})")));
        }
        Ok(Self { z_samples, c })
    }

    pub fn z_samples(&self) -> &[f64] {
        &self.z_samples
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

pub fn sample_limit_maximum(spec: &GumbelMixtureSpec, rng: &mut RngStream) -> f64 {
    let g: f64 = rng.sample(Gumbel::new(0.0, 1.0).expect("unit Gumbel is valid"));
    let z = spec.z_samples[rng.random_range(0..spec.z_samples.len())];
    (g + (spec.c * z).ln()) / SQRT_2
}

/// CDF `exp(-e^{-√2(x - shift)})` of `G/√2 + shift`.
pub fn scaled_gumbel_cdf(x: f64, shift: f64) -> f64 {
    (-(-SQRT_2 * (x - shift)).exp()).exp()
}
