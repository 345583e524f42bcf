//! Command-line front end: reads a TOML experiment config, runs one of the
//! simulation, ensemble, check, fluctuation, overlap or limit self-test
//! commands, and writes tab-separated tables.
//!
//! Exit codes: 0 when every verdict passes, 1 when any fails, 2 on a
//! configuration or runtime error, 3 when every verdict is inconclusive.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use bbm_core::bbm::{simulate, write_particles, write_snapshots};
use bbm_core::experiments::{
    fluctuation_experiment, fluctuation_metadata, fluctuation_table, limits_selftest, overall_status,
    overlap_decay_experiment, run_ensemble, verdict_table, write_atomic, write_ensemble_outputs, ExperimentError,
    Provenance, SelftestSettings, Status, Verdict,
};
use bbm_core::sampling::{Lane, RngStream};

pub use config::{parse_config, parse_config_str, sha256_hex, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid {field}: {message}")]
    Invalid { field: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
}

#[derive(Debug, Parser)]
#[command(name = "bbm", version, about = "Branching Brownian motion experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate replication 0 and dump its particles and snapshots.
    Simulate(Common),
    /// Record the configured statistics over an ensemble.
    Ensemble(Common),
    /// Run the configured checks over an ensemble.
    Check(Common),
    /// Fluctuations of the additive martingale around its limit.
    Fluctuations(Common),
    /// Decay of the overlap distribution.
    Overlap(Common),
    /// Self-test of the limit-law samplers.
    LimitsSelftest(SelftestArgs),
}

#[derive(Debug, Args)]
pub struct Overrides {
    /// Output directory (overrides `experiment.output_dir`).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Master seed (overrides `experiment.master_seed`).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replication count (overrides `experiment.replications`).
    #[arg(long)]
    pub replications: Option<usize>,
    /// Worker threads; defaults to every available core.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Print every verdict and written file on standard error.
    #[arg(short, long, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Optional; the `[limits]` section and master seed are read from it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

struct Outcome {
    status: Status,
    verdicts: Vec<Verdict>,
    files: Vec<PathBuf>,
}

/// Loads a config and applies the command-line overrides. Overrides are
/// folded into the recorded hash.
fn load(path: &Path, o: &Overrides) -> Result<RunConfig, CliError> {
    let mut rc = parse_config(path)?;
    let cfg = &mut rc.experiment;
    if let Some(seed) = o.seed {
        cfg.master_seed = seed;
        rc.limits.master_seed = seed;
    }
    if let Some(r) = o.replications {
        cfg.replications = r;
    }
    if let Some(w) = o.workers {
        cfg.workers = Some(w);
    }
    if let Some(dir) = &o.output {
        cfg.output_dir = dir.clone();
    }
    if o.seed.is_some() || o.replications.is_some() {
        let text = format!("{}\nseed={:?}\nreplications={:?}\n", rc.hash, o.seed, o.replications);
        rc.hash = sha256_hex(text.as_bytes());
    }
    cfg.validate().map_err(|e| CliError::Invalid {
        field: "override".into(),
        message: e.to_string(),
    })?;
    Ok(rc)
}

fn provenance(rc: &RunConfig) -> Provenance {
    Provenance {
        config_hash: rc.hash.clone(),
        master_seed: rc.experiment.master_seed,
    }
}

fn simulate_command(rc: &RunConfig) -> Result<Outcome, CliError> {
    let cfg = &rc.experiment;
    let mut rng = RngStream::with_lane(cfg.master_seed, Lane::Simulation, 0);
    let real = simulate(&cfg.simulation, &mut rng).map_err(ExperimentError::from)?;
    let header = provenance(rc).header();
    let mut particles = header.clone().into_bytes();
    let mut snapshots = header.into_bytes();
    write_particles(&real, &mut particles).expect("writing to memory");
    write_snapshots(&real, &mut snapshots).expect("writing to memory");
    let dir = &cfg.output_dir;
    let files = vec![
        dir.join(format!("{}.particles.tsv", cfg.name)),
        dir.join(format!("{}.snapshots.tsv", cfg.name)),
    ];
    write_atomic(&files[0], &String::from_utf8(particles).expect("UTF-8"))?;
    write_atomic(&files[1], &String::from_utf8(snapshots).expect("UTF-8"))?;
    Ok(Outcome {
        status: Status::Pass,
        verdicts: Vec::new(),
        files,
    })
}

fn ensemble_command(rc: &RunConfig, with_checks: bool) -> Result<Outcome, CliError> {
    let mut cfg = rc.experiment.clone();
    if with_checks {
        if cfg.checks.is_empty() {
            return Err(CliError::Usage("the config enables no checks".into()));
        }
    } else {
        cfg.checks.clear();
        if cfg.statistics.is_empty() {
            return Err(CliError::Usage("the config records no statistics".into()));
        }
    }
    let summary = run_ensemble(&cfg)?;
    let files = write_ensemble_outputs(&cfg.output_dir, &summary, &provenance(rc), rc.series)?;
    Ok(Outcome {
        status: if with_checks {
            overall_status(&summary.verdicts)
        } else {
            Status::Pass
        },
        verdicts: summary.verdicts,
        files,
    })
}

fn fluctuations_command(rc: &RunConfig) -> Result<Outcome, CliError> {
    let settings = rc
        .fluctuations
        .ok_or_else(|| CliError::Usage("the config has no [fluctuations] section".into()))?;
    let cfg = &rc.experiment;
    let report = fluctuation_experiment(cfg, &settings)?;
    let prov = provenance(rc);
    let dir = &cfg.output_dir;
    let files = vec![
        (dir.join(format!("{}.fluctuations.tsv", cfg.name)), fluctuation_table(&report, &prov)),
        (dir.join(format!("{}.verdicts.tsv", cfg.name)), verdict_table(&report.verdicts, &prov)),
        (dir.join(format!("{}.metadata.tsv", cfg.name)), fluctuation_metadata(cfg, &report, &prov)),
    ];
    for (path, contents) in &files {
        write_atomic(path, contents)?;
    }
    Ok(Outcome {
        status: overall_status(&report.verdicts),
        verdicts: report.verdicts,
        files: files.into_iter().map(|(p, _)| p).collect(),
    })
}

fn overlap_command(rc: &RunConfig) -> Result<Outcome, CliError> {
    let betas = rc
        .overlap_betas
        .clone()
        .ok_or_else(|| CliError::Usage("the config has no [overlap] section".into()))?;
    let mut cfg = rc.experiment.clone();
    cfg.betas = betas;
    cfg.checks.clear();
    let summary = overlap_decay_experiment(&cfg)?;
    let files = write_ensemble_outputs(&cfg.output_dir, &summary, &provenance(rc), rc.series)?;
    Ok(Outcome {
        status: overall_status(&summary.verdicts),
        verdicts: summary.verdicts,
        files,
    })
}

fn selftest_command(args: &SelftestArgs) -> Result<Outcome, CliError> {
    let o = &args.overrides;
    let (settings, hash, dir) = match &args.config {
        Some(path) => {
            let rc = load(path, o)?;
            (rc.limits.clone(), rc.hash.clone(), rc.experiment.output_dir.clone())
        }
        None => {
            let mut s = SelftestSettings::default();
            let mut text = String::new();
            if let Some(seed) = o.seed {
                s.master_seed = seed;
                text = format!("seed={seed}\n");
            }
            let dir = o.output.clone().unwrap_or_else(|| PathBuf::from("results"));
            (s, sha256_hex(text.as_bytes()), dir)
        }
    };
    let verdicts = limits_selftest(&settings)?;
    let prov = Provenance {
        config_hash: hash,
        master_seed: settings.master_seed,
    };
    let path = dir.join("limits_selftest.verdicts.tsv");
    write_atomic(&path, &verdict_table(&verdicts, &prov))?;
    Ok(Outcome {
        status: overall_status(&verdicts),
        verdicts,
        files: vec![path],
    })
}

fn execute(cli: &Cli) -> Result<(Outcome, u8), CliError> {
    let (outcome, verbose) = match &cli.command {
        Command::LimitsSelftest(args) => (selftest_command(args)?, args.overrides.verbose),
        Command::Simulate(c) | Command::Ensemble(c) | Command::Check(c) | Command::Fluctuations(c) | Command::Overlap(c) => {
            let rc = load(&c.config, &c.overrides)?;
            let outcome = match &cli.command {
                Command::Simulate(_) => simulate_command(&rc)?,
                Command::Ensemble(_) => ensemble_command(&rc, false)?,
                Command::Check(_) => ensemble_command(&rc, true)?,
                Command::Fluctuations(_) => fluctuations_command(&rc)?,
                Command::Overlap(_) => overlap_command(&rc)?,
                Command::LimitsSelftest(_) => unreachable!(),
            };
            (outcome, c.overrides.verbose)
        }
    };
    Ok((outcome, verbose))
}

pub fn exit_code(status: Status) -> u8 {
    match status {
        Status::Pass => 0,
        Status::Fail => 1,
        Status::Inconclusive => 3,
    }
}

/// Runs a parsed command line, reports on standard error, and returns the
/// process exit code.
pub fn run(cli: &Cli) -> u8 {
    match execute(cli) {
        Ok((outcome, verbose)) => {
            for v in &outcome.verdicts {
                if verbose > 0 || v.status == Status::Fail {
                    let t = v.t.map(|t| format!(" t={t}")).unwrap_or_default();
                    eprintln!(
                        "{:<12} {}: {}{t}: expected {} measured {} ({})",
                        v.status, v.check, v.label, v.expected, v.measured, v.detail
                    );
                }
            }
            if verbose > 0 {
                for f in &outcome.files {
                    eprintln!("wrote {}", f.display());
                }
            }
            let count = |s: Status| outcome.verdicts.iter().filter(|v| v.status == s).count();
            eprintln!(
                "{}: {} passed, {} failed, {} inconclusive; {} files written",
                outcome.status,
                count(Status::Pass),
                count(Status::Fail),
                count(Status::Inconclusive),
                outcome.files.len()
            );
            exit_code(outcome.status)
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => ExitCode::from(run(&cli)),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            ExitCode::from(code)
        }
    }
}
