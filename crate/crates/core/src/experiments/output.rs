use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use super::ensemble::{EnsembleSummary, QUANTILE_LEVELS};
use super::fluctuation::{FluctuationReport, FLUCTUATION_COLUMNS};
use super::verdict::VERDICT_COLUMNS;
use super::{ExperimentConfig, ExperimentError, Verdict};
use crate::statistics::{StatisticSeries, SERIES_COLUMNS};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const SUMMARY_COLUMNS: [&str; 15] = [
    "statistic", "beta", "level", "function", "t", "count", "survivors", "mean", "variance", "se", "q05",
    "q25", "q50", "q75", "q95",
];

/// Identifies the run every table came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    /// Hex SHA-256 of the config text.
    pub config_hash: String,
    pub master_seed: u64,
}

impl Provenance {
    pub fn header(&self) -> String {
        format!(
            "# config_sha256={} master_seed={} version={}\n",
            self.config_hash, self.master_seed, CODE_VERSION
        )
    }
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn table(provenance: &Provenance, columns: &[&str]) -> String {
    let mut s = provenance.header();
    s.push_str(&columns.join("\t"));
    s.push('\n');
    s
}

/// One row per recorded statistic.
pub fn summary_table(summary: &EnsembleSummary, provenance: &Provenance) -> String {
    let mut s = table(provenance, &SUMMARY_COLUMNS);
    debug_assert_eq!(QUANTILE_LEVELS.len(), 5);
    for (key, agg) in summary.keys.iter().zip(&summary.aggregates) {
        let st = &key.statistic;
        let q: Vec<String> = agg.quantiles.iter().map(|&x| num(x)).collect();
        writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            st.name(),
            opt(st.beta()),
            opt(st.level()),
            st.function().map(|f| f.to_string()).unwrap_or_default(),
            num(key.t),
            agg.count,
            agg.survivors,
            num(agg.mean),
            num(agg.variance),
            num(agg.se),
            q.join("\t")
        )
        .expect("writing to a string");
    }
    s
}

pub fn verdict_table(verdicts: &[Verdict], provenance: &Provenance) -> String {
    let mut s = table(provenance, &VERDICT_COLUMNS);
    for v in verdicts {
        writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            v.check,
            v.label,
            opt(v.t),
            num(v.expected),
            num(v.measured),
            num(v.se),
            num(v.threshold),
            v.status,
            v.detail.replace(['\t', '\n'], " ")
        )
        .expect("writing to a string");
    }
    s
}

/// Per-replication values, one row per replication, statistic and time.
pub fn series_table(summary: &EnsembleSummary, provenance: &Provenance) -> String {
    let mut out = table(provenance, &SERIES_COLUMNS).into_bytes();
    for (r, (&id, &survived)) in summary.replication_ids.iter().zip(&summary.survived).enumerate() {
        for (key, values) in summary.keys.iter().zip(&summary.values) {
            let mut series = StatisticSeries::new(key.statistic.name());
            series.beta = key.statistic.beta();
            series.a = key.statistic.level();
            series.function = key.statistic.function().map(|f| f.to_string());
            series.push(key.t, values[r]);
            series.write_rows(id, survived, &mut out).expect("writing to memory");
        }
    }
    String::from_utf8(out).expect("rows are UTF-8")
}

fn config_lines(cfg: &ExperimentConfig, s: &mut String) {
    let sim = &cfg.simulation;
    let moments = sim.offspring.moments();
    let lines: Vec<(&str, String)> = vec![
        ("experiment", cfg.name.clone()),
        ("master_seed", cfg.master_seed.to_string()),
        ("replications", cfg.replications.to_string()),
        ("horizon", num(sim.horizon)),
        ("snapshot_times", format!("{:?}", sim.snapshot_times)),
        ("offspring_weights", format!("{:?}", sim.offspring.weights())),
        ("offspring_k", num(moments.k)),
        ("particle_cap", sim.particle_cap.to_string()),
        ("barrier", format!("{:?}", sim.barrier)),
        ("betas", format!("{:?}", cfg.betas.values())),
        ("a_grid", format!("{:?}", cfg.a_grid)),
        ("times", format!("{:?}", cfg.times)),
        ("tests", format!("{:?}", cfg.tests)),
        ("checks", format!("{:?}", cfg.checks)),
    ];
    for (k, v) in lines {
        writeln!(s, "{k}\t{v}").expect("writing to a string");
    }
}

/// Key/value echo of the config plus run counts.
pub fn metadata_table(summary: &EnsembleSummary, provenance: &Provenance) -> String {
    let mut s = table(provenance, &["key", "value"]);
    config_lines(&summary.config, &mut s);
    for (k, v) in [
        ("code_version", CODE_VERSION.to_string()),
        ("workers", summary.workers.to_string()),
        ("kept_replications", summary.replications().to_string()),
        ("truncated_replications", summary.truncated.to_string()),
        ("surviving_replications", summary.survivors.to_string()),
    ] {
        writeln!(s, "{k}\t{v}").expect("writing to a string");
    }
    s
}

pub fn fluctuation_table(report: &FluctuationReport, provenance: &Provenance) -> String {
    let mut s = table(provenance, &FLUCTUATION_COLUMNS);
    for x in &report.samples {
        writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            x.replication,
            num(x.w_t),
            num(x.w_proxy),
            num(x.variance_proxy),
            num(x.rescaled),
            num(x.sigma),
            num(x.standardized)
        )
        .expect("writing to a string");
    }
    s
}

pub fn fluctuation_metadata(cfg: &ExperimentConfig, report: &FluctuationReport, provenance: &Provenance) -> String {
    let mut s = table(provenance, &["key", "value"]);
    config_lines(cfg, &mut s);
    let settings = report.settings;
    for (k, v) in [
        ("code_version", CODE_VERSION.to_string()),
        ("regime", report.spec.regime().to_string()),
        ("fluctuation_beta", num(settings.beta)),
        ("fluctuation_t", num(settings.t)),
        ("proxy_gap", num(settings.delta)),
        ("proxy_horizon", num(settings.t + settings.delta)),
        ("workers", report.workers.to_string()),
        ("kept_replications", report.samples.len().to_string()),
        ("truncated_replications", report.truncated.to_string()),
        ("surviving_replications", report.survivors.to_string()),
        ("hill_sensitivity", format!("{:?}", report.hill)),
    ] {
        writeln!(s, "{k}\t{v}").expect("writing to a string");
    }
    s
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory and a rename, so readers never see a partial table.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    let io = |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| ExperimentError::config(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", file_name.to_string_lossy()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io)
}

/// Writes `<name>.summary.tsv`, `<name>.verdicts.tsv`, `<name>.metadata.tsv`
/// and optionally `<name>.series.tsv` into `dir`.
pub fn write_ensemble_outputs(
    dir: &Path,
    summary: &EnsembleSummary,
    provenance: &Provenance,
    series: bool,
) -> Result<Vec<PathBuf>, ExperimentError> {
    let name = &summary.config.name;
    let mut files = vec![
        (dir.join(format!("{name}.summary.tsv")), summary_table(summary, provenance)),
        (dir.join(format!("{name}.verdicts.tsv")), verdict_table(&summary.verdicts, provenance)),
        (dir.join(format!("{name}.metadata.tsv")), metadata_table(summary, provenance)),
    ];
    if series {
        files.push((dir.join(format!("{name}.series.tsv")), series_table(summary, provenance)));
    }
    for (path, contents) in &files {
        write_atomic(path, contents)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}
