use std::f64::consts::SQRT_2;

use crate::bbm::Snapshot;

use super::StatsError;

/// `M(t) = max_{u∈N(t)} X_u(t)`.
pub fn max_displacement(snap: &Snapshot) -> Result<f64, StatsError> {
    snap.positions()
        .reduce(f64::max)
        .ok_or(StatsError::EmptyPopulation("maximal displacement"))
}

/// `m(t) = √2 t − (3/(2√2)) ln t`.
pub fn centering(t: f64) -> Result<f64, StatsError> {
    if !(t > 0.0) {
        return Err(StatsError::NonPositiveTime { what: "centering", t });
    }
    Ok(SQRT_2 * t - 3.0 / (2.0 * SQRT_2) * t.ln())
}

/// Number of particles with `X_u(t) − m(t) >= x`.
pub fn extremal_count(snap: &Snapshot, x: f64) -> Result<usize, StatsError> {
    let level = centering(snap.time)? + x;
    Ok(snap.positions().filter(|&p| p >= level).count())
}
