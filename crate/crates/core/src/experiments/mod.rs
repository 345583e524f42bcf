//! Seeded ensembles, the oracle checks run over them, and the fluctuation
//! and overlap experiments.
//!
//! Replication `i` of an ensemble always uses stream `i` of the simulation
//! lane, whatever checks are enabled and however many workers run, and
//! aggregation is a sequential fold in replication order; every number in a
//! summary is therefore a function of the config and the master seed alone.
//! Independent oracles draw from their own lane.

mod checks;
mod config;
mod ensemble;
mod fluctuation;
mod output;
mod overlap;
mod selftest;
mod verdict;

use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::bbm::SimError;
use crate::limits::LimitError;
use crate::numerics::QuadratureFailure;
use crate::sampling::SamplingError;
use crate::statistics::StatsError;

pub use checks::{
    check_barrier_bound, check_critical_scaling, check_death_functional, check_functional_limit,
    check_growth_limit, check_many_to_one, check_martingale, check_population_moments, check_second_moment,
    gaussian_expectation, second_moment,
};
pub use config::{snapshot_grid, Check, ExperimentConfig, StatKey, Statistic, TestSettings};
pub use ensemble::{evaluate_statistic, run_ensemble, Aggregate, EnsembleSummary, QUANTILE_LEVELS};
pub use fluctuation::{
    fluctuation_experiment, FluctuationReport, FluctuationSample, FluctuationSettings, FLUCTUATION_COLUMNS,
};
pub use output::{
    fluctuation_metadata, fluctuation_table, metadata_table, series_table, summary_table, verdict_table,
    write_atomic, write_ensemble_outputs, Provenance, CODE_VERSION, SUMMARY_COLUMNS,
};
pub use overlap::overlap_decay_experiment;
pub use selftest::{limits_selftest, SelftestSettings};
pub use verdict::{overall_status, Status, Verdict, VERDICT_COLUMNS};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("statistic {0} was not recorded")]
    MissingStatistic(String),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error(transparent)]
    Statistics(#[from] StatsError),
    #[error(transparent)]
    Limits(#[from] LimitError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureFailure),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl ExperimentError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        ExperimentError::Config(msg.into())
    }
}
