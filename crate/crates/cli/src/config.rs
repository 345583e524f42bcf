use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use bbm_core::bbm::{Barrier, SimConfig, DEFAULT_PARTICLE_CAP};
use bbm_core::experiments::{
    snapshot_grid, Check, ExperimentConfig, FluctuationSettings, SelftestSettings, StatKey, Statistic, TestSettings,
};
use bbm_core::sampling::{OffspringDistribution, DEFAULT_SERIES_FLOOR};
use bbm_core::statistics::{BetaGrid, TestFunction};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: RawExperiment,
    #[serde(default)]
    simulation: RawSimulation,
    #[serde(default)]
    statistics: RawStatistics,
    #[serde(default)]
    checks: RawChecks,
    fluctuations: Option<RawFluctuations>,
    overlap: Option<RawOverlap>,
    #[serde(default)]
    limits: RawLimits,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    name: String,
    replications: usize,
    master_seed: u64,
    times: Vec<f64>,
    output_dir: Option<PathBuf>,
    workers: Option<usize>,
    #[serde(default)]
    series: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulation {
    horizon: Option<f64>,
    snapshot_times: Option<Vec<f64>>,
    offspring_weights: Option<Vec<f64>>,
    particle_cap: Option<usize>,
    barrier_slope: Option<f64>,
    barrier_offset: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStatistics {
    #[serde(default)]
    betas: Vec<f64>,
    #[serde(default)]
    functions: Vec<String>,
    #[serde(default)]
    record: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLimitCheck {
    beta: f64,
    function: String,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChecks {
    #[serde(default)]
    population_moments: bool,
    #[serde(default)]
    lineage_windows: Vec<(f64, f64)>,
    #[serde(default)]
    martingale: bool,
    #[serde(default)]
    second_moment: bool,
    #[serde(default)]
    many_to_one: Vec<String>,
    #[serde(default)]
    death_functional: Vec<String>,
    barrier_level: Option<f64>,
    #[serde(default)]
    functional_limit: Vec<RawLimitCheck>,
    #[serde(default)]
    growth_limit: Vec<RawLimitCheck>,
    #[serde(default)]
    critical_scaling: bool,
    se_multiplier: Option<f64>,
    significance: Option<f64>,
    relative_tolerance: Option<f64>,
    slope_tolerance: Option<f64>,
    hill_tolerance: Option<f64>,
    min_survivors: Option<usize>,
    correlation_threshold: Option<f64>,
    iqr_band: Option<(f64, f64)>,
    oracle_samples: Option<usize>,
    oracle_scale: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFluctuations {
    beta: f64,
    t: f64,
    delta: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOverlap {
    a_grid: Vec<f64>,
    betas: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLimits {
    draws: Option<usize>,
    gumbel_draws: Option<usize>,
    series_floor: Option<f64>,
    hill_k: Option<usize>,
    pareto_tolerance: Option<f64>,
    stable_hill_tolerance: Option<f64>,
}

/// Everything a config file describes.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub experiment: ExperimentConfig,
    /// Write the per-replication table.
    pub series: bool,
    pub fluctuations: Option<FluctuationSettings>,
    /// β grid of the overlap decay run; `None` without an `[overlap]` section.
    pub overlap_betas: Option<BetaGrid>,
    pub limits: SelftestSettings,
    /// Hex SHA-256 of the config text.
    pub hash: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Invalid {
        field: field.to_string(),
        message: msg.to_string(),
    }
}

fn function(field: &str, s: &str) -> Result<TestFunction, CliError> {
    s.parse().map_err(|e| invalid(field, e))
}

fn betas(field: &str, values: Vec<f64>) -> Result<BetaGrid, CliError> {
    BetaGrid::new(values).map_err(|e| invalid(field, e))
}

/// Reads and validates a config file.
pub fn parse_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text).map_err(|e| match e {
        CliError::Parse(msg) => CliError::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// [`parse_config`] on config text.
pub fn parse_config_str(text: &str) -> Result<RunConfig, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    let hash = sha256_hex(text.as_bytes());
    let exp = raw.experiment;
    let sim = raw.simulation;

    let offspring = match sim.offspring_weights {
        Some(w) => OffspringDistribution::from_dense(w).map_err(|e| invalid("simulation.offspring_weights", e))?,
        None => OffspringDistribution::binary(),
    };
    let (a_grid, overlap_betas) = match raw.overlap {
        Some(o) => {
            let grid = o.betas.map(|b| betas("overlap.betas", b)).transpose()?;
            (o.a_grid, Some(grid))
        }
        None => (Vec::new(), None),
    };
    let stat_betas = betas("statistics.betas", raw.statistics.betas)?;
    let overlap_betas = overlap_betas.map(|g| g.unwrap_or_else(|| stat_betas.clone()));

    let snapshot_times = sim.snapshot_times.unwrap_or_else(|| snapshot_grid(&exp.times, &a_grid));
    let horizon = sim
        .horizon
        .or_else(|| snapshot_times.iter().copied().reduce(f64::max))
        .ok_or_else(|| invalid("experiment.times", "the time grid is empty"))?;
    let barrier = match (sim.barrier_slope, sim.barrier_offset) {
        (None, None) => None,
        (Some(slope), Some(offset)) => Some(Barrier { slope, offset }),
        _ => return Err(invalid("simulation.barrier_slope", "barrier_slope and barrier_offset go together")),
    };
    let simulation = SimConfig {
        horizon,
        snapshot_times,
        offspring,
        particle_cap: sim.particle_cap.unwrap_or(DEFAULT_PARTICLE_CAP),
        barrier,
    };
    simulation.validate().map_err(|e| invalid("simulation", e))?;

    let functions = raw
        .statistics
        .functions
        .iter()
        .map(|s| function("statistics.functions", s))
        .collect::<Result<Vec<_>, _>>()?;
    let mut statistics = Vec::new();
    for name in &raw.statistics.record {
        let per_beta = |f: &dyn Fn(f64) -> Statistic| stat_betas.values().iter().map(|&b| f(b)).collect::<Vec<_>>();
        let per_function = |f: &dyn Fn(TestFunction) -> Statistic| functions.iter().map(|&g| f(g)).collect::<Vec<_>>();
        let kinds: Vec<Statistic> = match name.as_str() {
            "population" => vec![Statistic::Population],
            "maximum" => vec![Statistic::Maximum],
            "centered_maximum" => vec![Statistic::CenteredMaximum],
            "barrier_excess" => vec![Statistic::BarrierExcess],
            "additive" => per_beta(&|beta| Statistic::Additive { beta }),
            "additive_squared" => per_beta(&|beta| Statistic::AdditiveSquared { beta }),
            "derivative" => per_beta(&|beta| Statistic::Derivative { beta }),
            "particle_sum" => per_function(&|function| Statistic::ParticleSum { function }),
            "pair_sum" => per_function(&|function| Statistic::PairSum { function }),
            "functional" | "growth" => {
                let mut out = Vec::new();
                for &beta in stat_betas.values() {
                    for &function in &functions {
                        out.push(if name == "functional" {
                            Statistic::Functional { beta, function }
                        } else {
                            Statistic::Growth { beta, function }
                        });
                    }
                }
                out
            }
            "overlap" => {
                let mut out = Vec::new();
                for &beta in stat_betas.values() {
                    out.extend(a_grid.iter().map(|&a| Statistic::Overlap { beta, a }));
                }
                out
            }
            other => return Err(invalid("statistics.record", format!("unknown statistic {other:?}"))),
        };
        for s in kinds {
            statistics.extend(exp.times.iter().map(|&t| StatKey::new(s.clone(), t)));
        }
    }

    let c = raw.checks;
    let mut checks = Vec::new();
    if c.population_moments {
        checks.push(Check::PopulationMoments {
            windows: c.lineage_windows,
        });
    } else if !c.lineage_windows.is_empty() {
        return Err(invalid("checks.lineage_windows", "needs population_moments = true"));
    }
    if c.martingale {
        checks.push(Check::Martingale);
    }
    if c.second_moment {
        checks.push(Check::SecondMoment);
    }
    for f in &c.many_to_one {
        checks.push(Check::ManyToOne {
            function: function("checks.many_to_one", f)?,
        });
    }
    for f in &c.death_functional {
        checks.push(Check::DeathFunctional {
            function: function("checks.death_functional", f)?,
        });
    }
    if let Some(level) = c.barrier_level {
        checks.push(Check::BarrierBound { level });
    }
    for l in &c.functional_limit {
        checks.push(Check::FunctionalLimit {
            beta: l.beta,
            function: function("checks.functional_limit", &l.function)?,
        });
    }
    for l in &c.growth_limit {
        checks.push(Check::GrowthLimit {
            beta: l.beta,
            function: function("checks.growth_limit", &l.function)?,
        });
    }
    if c.critical_scaling {
        checks.push(Check::CriticalScaling);
    }
    let d = TestSettings::default();
    let tests = TestSettings {
        se_multiplier: c.se_multiplier.unwrap_or(d.se_multiplier),
        significance: c.significance.unwrap_or(d.significance),
        relative_tolerance: c.relative_tolerance.unwrap_or(d.relative_tolerance),
        slope_tolerance: c.slope_tolerance.unwrap_or(d.slope_tolerance),
        hill_tolerance: c.hill_tolerance.unwrap_or(d.hill_tolerance),
        min_survivors: c.min_survivors.unwrap_or(d.min_survivors),
        correlation_threshold: c.correlation_threshold.unwrap_or(d.correlation_threshold),
        iqr_band: c.iqr_band.unwrap_or(d.iqr_band),
        oracle_samples: c.oracle_samples.unwrap_or(d.oracle_samples),
        oracle_scale: c.oracle_scale.unwrap_or(d.oracle_scale),
    };

    let experiment = ExperimentConfig {
        name: exp.name,
        simulation,
        replications: exp.replications,
        master_seed: exp.master_seed,
        betas: stat_betas,
        a_grid,
        times: exp.times,
        tests,
        output_dir: exp.output_dir.unwrap_or_else(|| PathBuf::from("results")),
        checks,
        statistics,
        workers: exp.workers,
    };
    if experiment.name.is_empty() || experiment.name.contains(['/', '\\']) {
        return Err(invalid("experiment.name", "must be a non-empty file name"));
    }
    experiment.validate().map_err(|e| invalid("experiment", e))?;

    let fluctuations = raw.fluctuations.map(|f| FluctuationSettings {
        beta: f.beta,
        t: f.t,
        delta: f.delta,
    });
    let l = raw.limits;
    let ld = SelftestSettings::default();
    let limits = SelftestSettings {
        master_seed: experiment.master_seed,
        draws: l.draws.unwrap_or(ld.draws),
        gumbel_draws: l.gumbel_draws.unwrap_or(ld.gumbel_draws),
        series_floor: l.series_floor.unwrap_or(DEFAULT_SERIES_FLOOR),
        hill_k: l.hill_k.unwrap_or(ld.hill_k),
        significance: experiment.tests.significance,
        se_multiplier: experiment.tests.se_multiplier,
        pareto_tolerance: l.pareto_tolerance.unwrap_or(ld.pareto_tolerance),
        stable_hill_tolerance: l.stable_hill_tolerance.unwrap_or(ld.stable_hill_tolerance),
    };
    Ok(RunConfig {
        experiment,
        series: exp.series,
        fluctuations,
        overlap_betas,
        limits,
        hash,
    })
}
