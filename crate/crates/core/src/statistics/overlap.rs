use std::collections::HashMap;

use crate::bbm::Realization;
use crate::numerics::LogSumExp;

use super::StatsError;

fn check_level(a: f64) -> Result<(), StatsError> {
    if a > 0.0 && a < 1.0 {
        Ok(())
    } else {
        Err(StatsError::InvalidLevel(a))
    }
}

/// `ν_{β,t}([a,1])`: the Gibbs weight of pairs of particles of `N(t)` whose
/// last common ancestor died after `at`, diagonal pairs included.
///
/// Particles are grouped by their ancestor alive at `at`, so the value is
/// `Σ_{w∈N(at)} (Σ_{v≥w} e^{βX_v(t)})² / (Σ_v e^{βX_v(t)})²`, computed in
/// linear time. Both `t` and `a·t` must be snapshot times. A population
/// extinct by `t` has no Gibbs measure and yields
/// [`StatsError::EmptyPopulation`].
pub fn overlap_mass(real: &Realization, beta: f64, t: f64, a: f64) -> Result<f64, StatsError> {
    check_level(a)?;
    let snap = real.alive_at(t)?;
    let early = real.alive_at(a * t)?;
    if snap.is_empty() {
        return Err(StatsError::EmptyPopulation("overlap distribution"));
    }
    let group_of: HashMap<usize, usize> = early
        .entries
        .iter()
        .enumerate()
        .map(|(g, e)| (e.particle, g))
        .collect();
    let mut groups = vec![LogSumExp::new(); early.len()];
    let mut total = LogSumExp::new();
    for e in &snap.entries {
        let ancestor = real.ancestor_at(e.particle, early.time)?;
        let g = group_of[&ancestor];
        groups[g].add(beta * e.position);
        total.add(beta * e.position);
    }
    let log_total = total.value();
    Ok(groups
        .iter()
        .filter(|g| !g.is_empty())
        .map(|g| (2.0 * (g.value() - log_total)).exp())
        .sum())
}

/// `ν_{β,t}([a,1])` for every level of an increasing grid.
pub fn overlap_cdf(
    real: &Realization,
    beta: f64,
    t: f64,
    a_grid: &[f64],
) -> Result<Vec<f64>, StatsError> {
    if a_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(StatsError::InvalidLevel(f64::NAN));
    }
    a_grid
        .iter()
        .map(|&a| overlap_mass(real, beta, t, a))
        .collect()
}

/// `O(n(t)²)` evaluation of [`overlap_mass`] from last-common-ancestor death
/// times. Intended for small trees.
pub fn overlap_mass_pairwise(
    real: &Realization,
    beta: f64,
    t: f64,
    a: f64,
) -> Result<f64, StatsError> {
    check_level(a)?;
    let snap = real.alive_at(t)?;
    real.alive_at(a * t)?;
    if snap.is_empty() {
        return Err(StatsError::EmptyPopulation("overlap distribution"));
    }
    let log_total = crate::numerics::log_sum_exp(snap.positions().map(|x| beta * x));
    let level = a * t;
    let mut mass = 0.0;
    for (i, u) in snap.entries.iter().enumerate() {
        for (j, v) in snap.entries.iter().enumerate() {
            let together = i == j || real.lca_death_time(u.particle, v.particle)? > level;
            if together {
                mass += (beta * (u.position + v.position) - 2.0 * log_total).exp();
            }
        }
    }
    Ok(mass)
}

/// `Σ_{u,v∈N(t)} e^{β(X_u+X_v)} / W_t(β)²` (scale-free), accumulated pair
/// by pair; equals one up to rounding.
pub fn total_pair_mass(real: &Realization, beta: f64, t: f64) -> Result<f64, StatsError> {
    let snap = real.alive_at(t)?;
    if snap.is_empty() {
        return Err(StatsError::EmptyPopulation("overlap distribution"));
    }
    let log_total = crate::numerics::log_sum_exp(snap.positions().map(|x| beta * x));
    let mut pairs = LogSumExp::new();
    for u in snap.positions() {
        for v in snap.positions() {
            pairs.add(beta * (u + v));
        }
    }
    Ok((pairs.value() - 2.0 * log_total).exp())
}
