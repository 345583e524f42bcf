use rayon::prelude::*;

use crate::bbm::{simulate, Realization, Snapshot};
use crate::inference::{mean_se, quantile_sorted};
use crate::sampling::{Lane, RngStream};
use crate::statistics::{
    additive_martingale, centering, derivative_martingale, functional_martingale, growth_statistic,
    max_displacement, overlap_mass, BETA_C,
};

use super::checks::{evaluate_check, requirements};
use super::{ExperimentConfig, ExperimentError, StatKey, Statistic, Verdict};

pub const QUANTILE_LEVELS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

/// Ensemble aggregates of one statistic over the replications where it is
/// defined.
#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub mean: f64,
    pub variance: f64,
    /// Sample standard deviation over `√count`.
    pub se: f64,
    /// At [`QUANTILE_LEVELS`].
    pub quantiles: [f64; 5],
    /// Replications where the value is defined.
    pub count: usize,
    /// Replications that survived to the horizon.
    pub survivors: usize,
}

impl Aggregate {
    fn of(values: &[f64], survivors: usize) -> Self {
        let mut defined: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
        let m = mean_se(&defined);
        defined.sort_by(f64::total_cmp);
        let quantiles = QUANTILE_LEVELS.map(|q| {
            if defined.is_empty() {
                f64::NAN
            } else {
                quantile_sorted(&defined, q)
            }
        });
        Self {
            mean: m.mean,
            variance: m.variance,
            se: m.se,
            quantiles,
            count: m.count,
            survivors,
        }
    }

    pub fn median(&self) -> f64 {
        self.quantiles[2]
    }
}

#[derive(Clone, Debug)]
pub struct EnsembleSummary {
    pub config: ExperimentConfig,
    /// Worker threads actually used.
    pub workers: usize,
    /// Replications dropped because they hit the particle cap.
    pub truncated: usize,
    /// Replications (among the kept ones) with survivors at the horizon.
    pub survivors: usize,
    /// Stream index of every kept replication, in order.
    pub replication_ids: Vec<usize>,
    pub survived: Vec<bool>,
    pub keys: Vec<StatKey>,
    pub aggregates: Vec<Aggregate>,
    /// Per-replication values, `values[key][replication]`; NaN where undefined.
    pub values: Vec<Vec<f64>>,
    pub verdicts: Vec<Verdict>,
}

impl EnsembleSummary {
    fn position(&self, key: &StatKey) -> Result<usize, ExperimentError> {
        self.keys
            .iter()
            .position(|k| k == key)
            .ok_or_else(|| ExperimentError::MissingStatistic(key.to_string()))
    }

    pub fn aggregate(&self, key: &StatKey) -> Result<&Aggregate, ExperimentError> {
        Ok(&self.aggregates[self.position(key)?])
    }

    pub fn values(&self, key: &StatKey) -> Result<&[f64], ExperimentError> {
        Ok(&self.values[self.position(key)?])
    }

    /// Kept replications.
    pub fn replications(&self) -> usize {
        self.replication_ids.len()
    }
}

struct Replicate {
    truncated: bool,
    survived: bool,
    values: Vec<f64>,
}

/// Runs `cfg.replications` seeded replications, records every statistic the
/// configured checks need plus `cfg.statistics`, and evaluates the checks.
///
/// Replication `i` uses stream `i` of the simulation lane, so results do not
/// depend on the worker count; aggregation is a sequential fold in
/// replication order.
pub fn run_ensemble(cfg: &ExperimentConfig) -> Result<EnsembleSummary, ExperimentError> {
    cfg.validate()?;
    let mut keys: Vec<StatKey> = Vec::new();
    for key in cfg.checks.iter().flat_map(|c| requirements(c, cfg)).chain(cfg.statistics.iter().cloned()) {
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let (workers, outcomes) = with_workers(cfg.workers, || {
        (0..cfg.replications)
            .into_par_iter()
            .map(|i| replicate(cfg, &keys, i))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let outcomes = outcomes?;

    let mut summary = EnsembleSummary {
        config: cfg.clone(),
        workers,
        truncated: 0,
        survivors: 0,
        replication_ids: Vec::new(),
        survived: Vec::new(),
        values: vec![Vec::new(); keys.len()],
        aggregates: Vec::new(),
        keys,
        verdicts: Vec::new(),
    };
    for (i, rep) in outcomes.into_iter().enumerate() {
        if rep.truncated {
            summary.truncated += 1;
            continue;
        }
        summary.replication_ids.push(i);
        summary.survived.push(rep.survived);
        summary.survivors += usize::from(rep.survived);
        for (column, v) in summary.values.iter_mut().zip(rep.values) {
            column.push(v);
        }
    }
    summary.aggregates = summary
        .values
        .iter()
        .map(|vals| {
            let survivors = vals
                .iter()
                .zip(&summary.survived)
                .filter(|(v, &s)| s && !v.is_nan())
                .count();
            Aggregate::of(vals, survivors)
        })
        .collect();
    for check in &cfg.checks {
        let verdicts = evaluate_check(check, &summary)?;
        summary.verdicts.extend(verdicts);
    }
    Ok(summary)
}

/// Runs `f` on a pool of `workers` threads, or on the global pool.
pub(crate) fn with_workers<T: Send>(
    workers: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<(usize, T), ExperimentError> {
    match workers {
        None => Ok((rayon::current_num_threads(), f())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| ExperimentError::config(format!("cannot start {n} workers: {e}")))?;
            Ok((n, pool.install(f)))
        }
    }
}

fn replicate(cfg: &ExperimentConfig, keys: &[StatKey], index: usize) -> Result<Replicate, ExperimentError> {
    let mut rng = RngStream::with_lane(cfg.master_seed, Lane::Simulation, index as u64);
    let real = simulate(&cfg.simulation, &mut rng)?;
    if real.truncated() {
        return Ok(Replicate {
            truncated: true,
            survived: false,
            values: Vec::new(),
        });
    }
    let values = keys
        .iter()
        .map(|key| evaluate_statistic(&real, key))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Replicate {
        truncated: false,
        survived: real.survived(),
        values,
    })
}

/// Value of one statistic on one realization; NaN where it is undefined.
pub fn evaluate_statistic(real: &Realization, key: &StatKey) -> Result<f64, ExperimentError> {
    let t = key.t;
    let snap = real.alive_at(t)?;
    let value = match &key.statistic {
        Statistic::Population => snap.len() as f64,
        Statistic::Lineage { s } => real.lineage_count(*s, t)? as f64,
        Statistic::Additive { beta } => additive_martingale(snap, *beta),
        Statistic::AdditiveSquared { beta } => additive_martingale(snap, *beta).powi(2),
        Statistic::Derivative { beta } => derivative_martingale(snap, *beta),
        Statistic::Maximum => max_displacement(snap).unwrap_or(f64::NAN),
        Statistic::CenteredMaximum => {
            if snap.is_empty() {
                f64::NAN
            } else {
                max_displacement(snap)? - centering(t)?
            }
        }
        Statistic::ParticleSum { function } => snap.positions().map(|x| function.eval(x)).sum(),
        Statistic::PairSum { function } => real.pair_functional(t, |s| function.eval(s))?,
        Statistic::Functional { beta, function } => functional_martingale(snap, *beta, |x| function.eval(x))?,
        Statistic::Growth { beta, function } => growth_statistic(snap, *beta, |x| function.eval(x)),
        Statistic::Overlap { beta, a } => {
            if snap.is_empty() {
                f64::NAN
            } else {
                overlap_mass(real, *beta, t, *a)?
            }
        }
        Statistic::BarrierExcess => barrier_excess(real.snapshots(), t),
    };
    Ok(value)
}

fn barrier_excess(snapshots: &[Snapshot], t: f64) -> f64 {
    snapshots
        .iter()
        .filter(|s| s.time <= t && !s.is_empty())
        .map(|s| max_displacement(s).expect("non-empty") - BETA_C * s.time)
        .reduce(f64::max)
        .unwrap_or(f64::NAN)
}
