use crate::bbm::Snapshot;
use crate::numerics::{LogSumExp, SignedLogSum};

use super::{growth_rate, StatsError};

/// `ln Σ_{u∈N(t)} e^{βX_u(t)} − c(β)t`; `-∞` for an empty population.
pub fn log_additive_martingale(snap: &Snapshot, beta: f64) -> f64 {
    let mut acc = LogSumExp::new();
    for x in snap.positions() {
        acc.add(beta * x);
    }
    acc.value() - growth_rate(beta) * snap.time
}

/// `W_t(β) = e^{−c(β)t} Σ_{u∈N(t)} e^{βX_u(t)}`.
pub fn additive_martingale(snap: &Snapshot, beta: f64) -> f64 {
    log_additive_martingale(snap, beta).exp()
}

/// `Z_t(β) = e^{−c(β)t} Σ_{u∈N(t)} (X_u(t) − βt) e^{βX_u(t)}`, the
/// β-derivative of `W_t(β)`.
pub fn derivative_martingale(snap: &Snapshot, beta: f64) -> f64 {
    let t = snap.time;
    let mut acc = SignedLogSum::default();
    for x in snap.positions() {
        acc.add(beta * x, x - beta * t);
    }
    acc.value_shifted(growth_rate(beta) * t)
}

/// `W_t(β, f) = Σ e^{βX_u(t) − c(β)t} f((X_u(t) − βt)/√t)`.
pub fn functional_martingale<F: Fn(f64) -> f64>(
    snap: &Snapshot,
    beta: f64,
    f: F,
) -> Result<f64, StatsError> {
    let t = snap.time;
    if !(t > 0.0) {
        return Err(StatsError::NonPositiveTime {
            what: "functional martingale",
            t,
        });
    }
    let root_t = t.sqrt();
    let mut acc = SignedLogSum::default();
    for x in snap.positions() {
        acc.add(beta * x, f((x - beta * t) / root_t));
    }
    Ok(acc.value_shifted(growth_rate(beta) * t))
}

/// `V_t = √t e^{−(1−β²/2)t} Σ f(X_u(t) − βt)`.
pub fn growth_statistic<F: Fn(f64) -> f64>(snap: &Snapshot, beta: f64, f: F) -> f64 {
    let t = snap.time;
    let sum: f64 = snap.positions().map(|x| f(x - beta * t)).sum();
    t.sqrt() * (-(1.0 - beta * beta / 2.0) * t).exp() * sum
}
