//! Samplers and evaluators for the limit objects: the Gumbel mixture of the
//! recentred maximum, the (undecorated) extremal point process, the
//! Gaussian and stable fluctuation scalings, and a tail-index estimator.

mod extremal;
mod fluctuations;
mod gumbel;
mod hill;

use thiserror::Error;

pub use extremal::{
    sample_decorated_extremal_process, sample_limit_extremal_atoms, Decoration,
    TrivialDecoration,
};
pub use fluctuations::{
    critical_z_proxy, gaussian_fluctuation_variance, rescale_fluctuation, FluctuationSpec, Regime,
};
pub use gumbel::{sample_limit_maximum, scaled_gumbel_cdf, GumbelMixtureSpec};
pub use hill::{hill_sensitivity, hill_tail_index, DEFAULT_HILL_FRACTION, HILL_FRACTIONS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimitError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("beta = {beta} does not belong to the {regime} regime")]
    RegimeMismatch { beta: f64, regime: Regime },
    #[error("no Gaussian fluctuation variance exists in the {0} regime")]
    UnsupportedRegime(Regime),
    #[error("degenerate input: {0}")]
    Degenerate(String),
}
