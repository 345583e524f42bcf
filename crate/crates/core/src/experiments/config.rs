use std::fmt;
use std::path::PathBuf;

use crate::bbm::{same_time, SimConfig};
use crate::statistics::{BetaGrid, TestFunction};

use super::ExperimentError;

/// Thresholds shared by every check.
#[derive(Clone, Debug, PartialEq)]
pub struct TestSettings {
    /// Mean comparisons pass within this many standard errors.
    pub se_multiplier: f64,
    /// Distributional tests pass when the p-value exceeds this level.
    pub significance: f64,
    /// Relative tolerance for limit-law means.
    pub relative_tolerance: f64,
    /// Relative tolerance for fitted decay slopes.
    pub slope_tolerance: f64,
    /// Absolute tolerance for Hill tail-index estimates.
    pub hill_tolerance: f64,
    /// Fewer surviving replications than this make a check inconclusive.
    pub min_survivors: usize,
    pub correlation_threshold: f64,
    /// Admissible band for ratios of interquartile ranges.
    pub iqr_band: (f64, f64),
    /// Size of independent Monte Carlo oracles.
    pub oracle_samples: usize,
    /// Multiplies every oracle value. Anything but 1 deliberately breaks the
    /// checks, which is how failure reporting is exercised.
    pub oracle_scale: f64,
}

impl Default for TestSettings {
    fn default() -> Self {
        Self {
            se_multiplier: 4.0,
            significance: 0.01,
            relative_tolerance: 0.10,
            slope_tolerance: 0.20,
            hill_tolerance: 0.25,
            min_survivors: 100,
            correlation_threshold: 0.9,
            iqr_band: (0.67, 1.5),
            oracle_samples: 1_000_000,
            oracle_scale: 1.0,
        }
    }
}

impl TestSettings {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let positive = [
            ("se_multiplier", self.se_multiplier),
            ("relative_tolerance", self.relative_tolerance),
            ("slope_tolerance", self.slope_tolerance),
            ("hill_tolerance", self.hill_tolerance),
            ("oracle_scale", self.oracle_scale),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ExperimentError::config(format!("{name} must be positive (got {v})")));
            }
        }
        if !(self.significance > 0.0 && self.significance < 1.0) {
            return Err(ExperimentError::config(format!(
                "significance must lie in (0, 1) (got {})",
                self.significance
            )));
        }
        if !(self.correlation_threshold > -1.0 && self.correlation_threshold < 1.0) {
            return Err(ExperimentError::config(format!(
                "correlation_threshold must lie in (-1, 1) (got {})",
                self.correlation_threshold
            )));
        }
        let (lo, hi) = self.iqr_band;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(ExperimentError::config(format!("iqr_band must satisfy 0 < lo < hi (got {lo}, {hi})")));
        }
        if self.oracle_samples < 2 {
            return Err(ExperimentError::config("oracle_samples must be at least 2"));
        }
        Ok(())
    }
}

/// Per-replication quantities an ensemble can record.
#[derive(Clone, Debug, PartialEq)]
pub enum Statistic {
    /// `n(t)`.
    Population,
    /// Lines alive at some time in `[s, t]`.
    Lineage { s: f64 },
    /// `W_t(β)`.
    Additive { beta: f64 },
    /// `W_t(β)²`.
    AdditiveSquared { beta: f64 },
    /// `Z_t(β)`.
    Derivative { beta: f64 },
    /// `M(t)`.
    Maximum,
    /// `M(t) − m(t)`.
    CenteredMaximum,
    /// `Σ_{u∈N(t)} f(X_u(t))`.
    ParticleSum { function: TestFunction },
    /// `Σ_{u≠v∈N(t)} f(d_{u∧v})`.
    PairSum { function: TestFunction },
    /// `W_t(β, f)`.
    Functional { beta: f64, function: TestFunction },
    /// `V_t`.
    Growth { beta: f64, function: TestFunction },
    /// `ν_{β,t}([a,1])`, defined while `N(t)` is non-empty.
    Overlap { beta: f64, a: f64 },
    /// Largest `M(s) − √2 s` over snapshot times `s ≤ t`.
    BarrierExcess,
}

impl Statistic {
    pub fn name(&self) -> &'static str {
        match self {
            Statistic::Population => "population",
            Statistic::Lineage { .. } => "lineage",
            Statistic::Additive { .. } => "additive",
            Statistic::AdditiveSquared { .. } => "additive_squared",
            Statistic::Derivative { .. } => "derivative",
            Statistic::Maximum => "maximum",
            Statistic::CenteredMaximum => "centered_maximum",
            Statistic::ParticleSum { .. } => "particle_sum",
            Statistic::PairSum { .. } => "pair_sum",
            Statistic::Functional { .. } => "functional",
            Statistic::Growth { .. } => "growth",
            Statistic::Overlap { .. } => "overlap",
            Statistic::BarrierExcess => "barrier_excess",
        }
    }

    pub fn beta(&self) -> Option<f64> {
        match *self {
            Statistic::Additive { beta }
            | Statistic::AdditiveSquared { beta }
            | Statistic::Derivative { beta }
            | Statistic::Functional { beta, .. }
            | Statistic::Growth { beta, .. }
            | Statistic::Overlap { beta, .. } => Some(beta),
            _ => None,
        }
    }

    /// The overlap level `a`, or the window start `s` of a lineage count.
    pub fn level(&self) -> Option<f64> {
        match *self {
            Statistic::Overlap { a, .. } => Some(a),
            Statistic::Lineage { s } => Some(s),
            _ => None,
        }
    }

    pub fn function(&self) -> Option<TestFunction> {
        match *self {
            Statistic::ParticleSum { function }
            | Statistic::PairSum { function }
            | Statistic::Functional { function, .. }
            | Statistic::Growth { function, .. } => Some(function),
            _ => None,
        }
    }
}

/// A statistic evaluated at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct StatKey {
    pub statistic: Statistic,
    pub t: f64,
}

impl StatKey {
    pub fn new(statistic: Statistic, t: f64) -> Self {
        Self { statistic, t }
    }
}

impl fmt::Display for StatKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.statistic.name())?;
        let mut params = Vec::new();
        if let Some(b) = self.statistic.beta() {
            params.push(format!("beta={b}"));
        }
        match self.statistic {
            Statistic::Overlap { a, .. } => params.push(format!("a={a}")),
            Statistic::Lineage { s } => params.push(format!("s={s}")),
            _ => {}
        }
        if let Some(g) = self.statistic.function() {
            params.push(format!("f={g}"));
        }
        if !params.is_empty() {
            write!(f, "[{}]", params.join(","))?;
        }
        write!(f, "@t={}", self.t)
    }
}

/// The checks an ensemble can be asked to run.
#[derive(Clone, Debug, PartialEq)]
pub enum Check {
    /// Mean population, lineage counts over the given `(s, t)` windows, and
    /// for binary branching the geometric law of `n(t)`.
    PopulationMoments { windows: Vec<(f64, f64)> },
    /// Mean of `W_t(β)` is 1 and of `Z_t(β)` is 0 for every β and t.
    Martingale,
    ManyToOne { function: TestFunction },
    DeathFunctional { function: TestFunction },
    SecondMoment,
    BarrierBound { level: f64 },
    /// Mean `W_t(β, f)` at the largest time against its Gaussian-integral limit.
    FunctionalLimit { beta: f64, function: TestFunction },
    /// Mean `V_t` at the largest time against its limit.
    GrowthLimit { beta: f64, function: TestFunction },
    CriticalScaling,
}

impl Check {
    pub fn name(&self) -> &'static str {
        match self {
            Check::PopulationMoments { .. } => "population_moments",
            Check::Martingale => "martingale",
            Check::ManyToOne { .. } => "many_to_one",
            Check::DeathFunctional { .. } => "death_functional",
            Check::SecondMoment => "second_moment",
            Check::BarrierBound { .. } => "barrier_bound",
            Check::FunctionalLimit { .. } => "functional_limit",
            Check::GrowthLimit { .. } => "growth_limit",
            Check::CriticalScaling => "critical_scaling",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    /// Template for every replication; snapshot times must cover `times`
    /// and every `a·t`.
    pub simulation: SimConfig,
    pub replications: usize,
    pub master_seed: u64,
    pub betas: BetaGrid,
    pub a_grid: Vec<f64>,
    pub times: Vec<f64>,
    pub tests: TestSettings,
    pub output_dir: PathBuf,
    pub checks: Vec<Check>,
    /// Extra statistics recorded by `run_ensemble` besides those the checks need.
    pub statistics: Vec<StatKey>,
    /// Worker threads; `None` uses every available core.
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    /// A config with default settings whose snapshot grid is exactly `times`.
    pub fn new(
        name: impl Into<String>,
        simulation_template: SimConfig,
        replications: usize,
        master_seed: u64,
        times: Vec<f64>,
    ) -> Self {
        let mut simulation = simulation_template;
        simulation.snapshot_times = snapshot_grid(&times, &[]);
        if let Some(&last) = simulation.snapshot_times.last() {
            simulation.horizon = simulation.horizon.max(last);
        }
        Self {
            name: name.into(),
            simulation,
            replications,
            master_seed,
            betas: BetaGrid::new(Vec::new()).expect("empty grid is valid"),
            a_grid: Vec::new(),
            times,
            tests: TestSettings::default(),
            output_dir: PathBuf::from("results"),
            checks: Vec::new(),
            statistics: Vec::new(),
            workers: None,
        }
    }

    /// Sets the overlap levels and widens the snapshot grid to include every `a·t`.
    pub fn with_levels(mut self, a_grid: Vec<f64>) -> Self {
        self.simulation.snapshot_times = snapshot_grid(&self.times, &a_grid);
        self.a_grid = a_grid;
        self
    }

    pub fn with_betas(mut self, betas: BetaGrid) -> Self {
        self.betas = betas;
        self
    }

    pub fn with_checks(mut self, checks: Vec<Check>) -> Self {
        self.checks = checks;
        self
    }

    pub fn horizon_time(&self) -> Option<f64> {
        self.times.iter().copied().reduce(f64::max)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.replications == 0 {
            return Err(ExperimentError::config("replications must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(ExperimentError::config("workers must be at least 1"));
        }
        self.simulation.validate()?;
        self.tests.validate()?;
        if self.times.is_empty() {
            return Err(ExperimentError::config("the time grid is empty"));
        }
        if self.times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ExperimentError::config("times must be strictly increasing"));
        }
        for &a in &self.a_grid {
            if !(a > 0.0 && a < 1.0) {
                return Err(ExperimentError::config(format!("overlap level a = {a} must lie in (0, 1)")));
            }
        }
        if self.a_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ExperimentError::config("a_grid must be strictly increasing"));
        }
        let snaps = &self.simulation.snapshot_times;
        let has = |t: f64| snaps.iter().any(|&s| same_time(s, t));
        for &t in &self.times {
            if !has(t) {
                return Err(ExperimentError::config(format!("time {t} is not a snapshot time")));
            }
            for &a in &self.a_grid {
                if !has(a * t) {
                    return Err(ExperimentError::config(format!(
                        "missing snapshot time {} (a = {a}, t = {t})",
                        a * t
                    )));
                }
            }
        }
        for key in &self.statistics {
            if !has(key.t) {
                return Err(ExperimentError::config(format!("statistic {key} needs snapshot time {}", key.t)));
            }
        }
        for check in &self.checks {
            check_arguments(check, self)?;
        }
        Ok(())
    }
}

fn check_arguments(check: &Check, cfg: &ExperimentConfig) -> Result<(), ExperimentError> {
    let snaps = &cfg.simulation.snapshot_times;
    let has = |t: f64| snaps.iter().any(|&s| same_time(s, t));
    match check {
        Check::PopulationMoments { windows } => {
            for &(s, t) in windows {
                if !(0.0 <= s && s <= t) {
                    return Err(ExperimentError::config(format!("lineage window [{s}, {t}] is not ordered")));
                }
                if !has(t) {
                    return Err(ExperimentError::config(format!("lineage window end {t} is not a snapshot time")));
                }
            }
        }
        Check::FunctionalLimit { function, .. } if !function.is_bounded() => {
            return Err(ExperimentError::config(format!(
                "functional_limit needs a bounded function (got {function})"
            )));
        }
        Check::GrowthLimit { function, .. } => {
            if compact_support(function).is_none() {
                return Err(ExperimentError::config(format!(
                    "growth_limit needs a finite indicator (got {function})"
                )));
            }
        }
        Check::BarrierBound { level } if !level.is_finite() => {
            return Err(ExperimentError::config("barrier level must be finite"));
        }
        _ => {}
    }
    Ok(())
}

/// Support of a compactly supported registry function.
pub(crate) fn compact_support(f: &TestFunction) -> Option<(f64, f64)> {
    match *f {
        TestFunction::Indicator { lo, hi } if lo.is_finite() && hi.is_finite() => Some((lo, hi)),
        TestFunction::Constant(c) if c == 0.0 => Some((0.0, 0.0)),
        _ => None,
    }
}

/// Sorted union of `times` and every `a·t`, with near-equal times merged.
pub fn snapshot_grid(times: &[f64], a_grid: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = times.to_vec();
    for &t in times {
        all.extend(a_grid.iter().map(|a| a * t));
    }
    all.sort_by(f64::total_cmp);
    all.dedup_by(|b, a| same_time(*a, *b));
    all
}
