//! Random streams and the primitive distributions used by the simulator and
//! the limit-law samplers.

mod offspring;
mod ppp;
mod rng;
mod stable;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use thiserror::Error;

pub use offspring::{offspring_moments, OffspringDistribution, OffspringMoments, WEIGHT_TOLERANCE};
pub use ppp::{sample_exponential_ppp, PPP_RATE};
pub use rng::{Lane, RngStream};
pub use stable::{
    sample_stable_positive, StableMethod, StableSpec, DEFAULT_SERIES_FLOOR,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("offspring weight μ({k}) = {weight} must be finite and non-negative")]
    InvalidWeight { k: u32, weight: f64 },
    #[error("offspring weights must sum to 1 (got {sum})")]
    NotNormalized { sum: f64 },
    #[error("offspring mean must equal 2 (got mean {mean})")]
    MeanNotTwo { mean: f64 },
    #[error("time increment must be non-negative (got {0})")]
    NegativeDuration(f64),
    #[error("stable index must lie in (0, 1) and scale be positive (alpha = {alpha}, scale = {scale})")]
    InvalidStable { alpha: f64, scale: f64 },
}

/// Exp(1) lifetime, strictly positive.
#[inline]
pub fn sample_lifetime<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let x: f64 = rng.sample(Exp1);
        if x > 0.0 {
            return x;
        }
    }
}

/// Brownian increment over a time step `dt`, i.e. a Normal(0, dt) draw.
/// `dt = 0` returns exactly zero without consuming randomness.
pub fn sample_gaussian_increment<R: Rng + ?Sized>(
    dt: f64,
    rng: &mut R,
) -> Result<f64, SamplingError> {
    if !(dt >= 0.0) {
        return Err(SamplingError::NegativeDuration(dt));
    }
    Ok(gaussian_increment(dt, rng))
}

/// Unchecked variant for hot loops where `dt >= 0` holds by construction.
#[inline]
pub(crate) fn gaussian_increment<R: Rng + ?Sized>(dt: f64, rng: &mut R) -> f64 {
    if dt == 0.0 {
        return 0.0;
    }
    let z: f64 = rng.sample(StandardNormal);
    dt.sqrt() * z
}
