use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use super::LimitError;
use crate::statistics::{centering, growth_rate};

/// Relative tolerance for recognising the boundary `β = √2/2`.
const BOUNDARY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `0 <= β < √2/2`: Gaussian, rate `e^{(1-β²)t/2}`.
    Subcritical,
    /// `β = √2/2`: Gaussian, rate `t^{1/4} e^{t/4}`.
    Boundary,
    /// `√2/2 < β < √2`: `√2/β`-stable, rate `e^{c(β)t - β m(t)}`.
    Extremal,
}

impl Regime {
    pub fn of(beta: f64) -> Option<Regime> {
        if !(0.0..std::f64::consts::SQRT_2).contains(&beta) {
            None
        } else if (beta - FRAC_1_SQRT_2).abs() <= BOUNDARY_TOLERANCE {
            Some(Regime::Boundary)
        } else if beta < FRAC_1_SQRT_2 {
            Some(Regime::Subcritical)
        } else {
            Some(Regime::Extremal)
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Subcritical => "subcritical",
            Regime::Boundary => "boundary",
            Regime::Extremal => "extremal",
        })
    }
}

/// Fluctuation regime of `W_∞(β) − W_t(β)` with the offspring constant `K`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluctuationSpec {
    regime: Regime,
    beta: f64,
    k: f64,
}

impl FluctuationSpec {
    pub fn new(regime: Regime, beta: f64, k: f64) -> Result<Self, LimitError> {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(LimitError::InvalidArgument(format!("K must be non-negative (got {k})")));
        }
        if Regime::of(beta) != Some(regime) {
            return Err(LimitError::RegimeMismatch { beta, regime });
        }
        Ok(Self { regime, beta, k })
    }

    /// Infers the regime from β.
    pub fn for_beta(beta: f64, k: f64) -> Result<Self, LimitError> {
        let regime = Regime::of(beta).ok_or_else(|| {
            LimitError::InvalidArgument(format!("beta must lie in [0, √2) (got {beta})"))
        })?;
        Self::new(regime, beta, k)
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Stability index `√2/β` of the extremal-regime limit.
    pub fn stable_index(&self) -> f64 {
        std::f64::consts::SQRT_2 / self.beta
    }

    /// Rate prefactor multiplying `W_∞(β) − W_t(β)`.
    pub fn rate(&self, t: f64) -> Result<f64, LimitError> {
        if !(t > 0.0) {
            return Err(LimitError::InvalidArgument(format!("t must be positive (got {t})")));
        }
        let beta = self.beta;
        Ok(match self.regime {
            Regime::Subcritical => ((1.0 - beta * beta) * t / 2.0).exp(),
            Regime::Boundary => t.powf(0.25) * (t / 4.0).exp(),
            Regime::Extremal => {
                let m = centering(t).expect("t > 0 checked above");
                (growth_rate(beta) * t - beta * m).exp()
            }
        })
    }
}

/// Conditional variance `σ²` of the Gaussian fluctuation limit given the
/// proxy of `W_∞(2β)` (subcritical) or `Z_∞` (boundary).
pub fn gaussian_fluctuation_variance(spec: &FluctuationSpec, w_or_z: f64) -> Result<f64, LimitError> {
    if !(w_or_z >= 0.0) {
        return Err(LimitError::InvalidArgument(format!(
            "martingale proxy must be non-negative (got {w_or_z})"
        )));
    }
    let (beta, k) = (spec.beta, spec.k);
    match spec.regime {
        Regime::Subcritical => Ok((k / (1.0 - beta * beta) - 1.0) * w_or_z),
        Regime::Boundary => Ok((2.0 * k - 1.0) * (2.0 / PI).sqrt() * w_or_z),
        Regime::Extremal => Err(LimitError::UnsupportedRegime(Regime::Extremal)),
    }
}

/// `rate(t) · (w_inf_proxy − w_t)`.
pub fn rescale_fluctuation(
    spec: &FluctuationSpec,
    t: f64,
    w_t: f64,
    w_inf_proxy: f64,
) -> Result<f64, LimitError> {
    Ok(spec.rate(t)? * (w_inf_proxy - w_t))
}

/// Proxy `√(π/2) · √t · W_t(√2)` for the derivative-martingale limit.
pub fn critical_z_proxy(t: f64, critical_additive: f64) -> f64 {
    (PI / 2.0).sqrt() * t.sqrt() * critical_additive
}
