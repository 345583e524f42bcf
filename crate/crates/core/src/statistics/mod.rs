//! Per-realization statistics: additive, derivative and functional
//! martingales, growth statistics, the maximum and its centering, extremal
//! counts, and the overlap distribution.
//!
//! Exponential sums go through log-sum-exp in particle-index order, so values
//! stay finite near the critical inverse temperature and are reproducible
//! bit for bit.

mod extremes;
mod functions;
mod martingales;
mod overlap;
mod series;

use std::f64::consts::SQRT_2;

use thiserror::Error;

use crate::bbm::SimError;

pub use extremes::{centering, extremal_count, max_displacement};
pub use functions::TestFunction;
pub use martingales::{
    additive_martingale, derivative_martingale, functional_martingale, growth_statistic,
    log_additive_martingale,
};
pub use overlap::{overlap_cdf, overlap_mass, overlap_mass_pairwise, total_pair_mass};
pub use series::{StatisticSeries, SERIES_COLUMNS};

/// Critical inverse temperature `β_c = √2`.
pub const BETA_C: f64 = SQRT_2;

/// `c(β) = 1 + β²/2`, the growth rate of `E Σ e^{βX_u(t)}`.
pub fn growth_rate(beta: f64) -> f64 {
    1.0 + beta * beta / 2.0
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("{0} is undefined for an empty population")]
    EmptyPopulation(&'static str),
    #[error("{what} requires t > 0 (got {t})")]
    NonPositiveTime { what: &'static str, t: f64 },
    #[error("overlap level a must lie in (0, 1) (got {0})")]
    InvalidLevel(f64),
    #[error("invalid beta grid: {0}")]
    InvalidBetaGrid(String),
    #[error("unknown test function `{0}`")]
    UnknownFunction(String),
    #[error(transparent)]
    Realization(#[from] SimError),
}

/// Sorted, duplicate-free inverse temperatures.
#[derive(Clone, Debug, PartialEq)]
pub struct BetaGrid(Vec<f64>);

impl BetaGrid {
    pub fn new(mut values: Vec<f64>) -> Result<Self, StatsError> {
        if let Some(bad) = values.iter().find(|b| !b.is_finite() || **b < 0.0) {
            return Err(StatsError::InvalidBetaGrid(format!(
                "beta values must be finite and non-negative (got {bad})"
            )));
        }
        values.sort_by(f64::total_cmp);
        if values.windows(2).any(|w| w[0] == w[1]) {
            return Err(StatsError::InvalidBetaGrid("duplicate beta value".into()));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_grid_sorts_and_rejects_duplicates() {
        let g = BetaGrid::new(vec![1.0, 0.0, BETA_C]).unwrap();
        assert_eq!(g.values(), &[0.0, 1.0, BETA_C]);
        assert!(BetaGrid::new(vec![0.5, 0.5]).is_err());
        assert!(BetaGrid::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn critical_rate() {
        assert_eq!(growth_rate(BETA_C), 2.0);
        assert_eq!(growth_rate(0.0), 1.0);
    }
}
