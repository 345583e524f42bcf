use std::fs;
use std::path::Path;
use std::process::Command;

use bbm_cli::{parse_config_str, CliError};

const MINIMAL: &str = r#"
[experiment]
name = "minimal"
replications = 100
master_seed = 1
times = [1.0, 2.0, 4.0]
"#;

fn bbm(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_bbm"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn minimal_config_fills_defaults() {
    let rc = parse_config_str(MINIMAL).unwrap();
    let cfg = &rc.experiment;
    assert_eq!(cfg.replications, 100);
    assert_eq!(cfg.simulation.horizon, 4.0);
    assert_eq!(cfg.simulation.snapshot_times, vec![1.0, 2.0, 4.0]);
    assert!(cfg.simulation.offspring.is_binary());
    assert_eq!(cfg.tests.se_multiplier, 4.0);
    assert!(cfg.checks.is_empty());
    assert_eq!(rc.hash.len(), 64);
}

#[test]
fn unnormalized_weights_are_rejected() {
    let text = format!("{MINIMAL}\n[simulation]\noffspring_weights = [0.0, 0.0, 0.9]\n");
    let err = parse_config_str(&text).unwrap_err();
    assert!(matches!(&err, CliError::Invalid { field, .. } if field == "simulation.offspring_weights"));
    assert!(err.to_string().contains("sum to 1"), "{err}");
}

#[test]
fn missing_overlap_snapshot_is_named() {
    let text = r#"
[experiment]
name = "o"
replications = 10
master_seed = 1
times = [2.0, 4.0]

[simulation]
snapshot_times = [2.0, 4.0]

[overlap]
a_grid = [0.5]
"#;
    let err = parse_config_str(text).unwrap_err().to_string();
    assert!(err.contains("missing snapshot time 1 "), "{err}");
}

#[test]
fn unknown_keys_are_rejected_with_location() {
    let text = format!("{MINIMAL}replicatons = 5\n");
    let err = parse_config_str(&text).unwrap_err().to_string();
    assert!(err.contains("replicatons") && err.contains("line"), "{err}");
    let text = format!("{MINIMAL}\n[checks]\nmartingal = true\n");
    assert!(parse_config_str(&text).is_err());
}

#[test]
fn bad_function_names_the_field() {
    let text = format!("{MINIMAL}\n[checks]\nmany_to_one = [\"cosine\"]\n");
    let err = parse_config_str(&text).unwrap_err().to_string();
    assert!(err.contains("checks.many_to_one"), "{err}");
}

#[test]
fn passing_ensemble_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "run.toml",
        r#"
[experiment]
name = "run"
replications = 100
master_seed = 3
times = [1.0, 2.0]

[statistics]
betas = [0.5]
record = ["population", "additive"]

[checks]
population_moments = true
martingale = true
"#,
    );
    let (code, _) = bbm(dir.path(), &["ensemble", "--config", &config]);
    assert_eq!(code, 0);
    let summary = fs::read_to_string(dir.path().join("results/run.summary.tsv")).unwrap();
    assert!(summary.starts_with("# config_sha256="));
    assert!(summary.contains("master_seed=3"));

    let (code, stderr) = bbm(dir.path(), &["check", "--config", &config, "--output", "checked"]);
    assert_eq!(code, 0, "{stderr}");
    let verdicts = fs::read_to_string(dir.path().join("checked/run.verdicts.tsv")).unwrap();
    assert!(verdicts.lines().skip(2).all(|l| l.contains("\tpass\t")), "{verdicts}");
}

#[test]
fn wrong_oracle_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "bad.toml",
        r#"
[experiment]
name = "bad"
replications = 100
master_seed = 3
times = [1.0, 2.0]

[checks]
population_moments = true
oracle_scale = 1.5
"#,
    );
    let (code, stderr) = bbm(dir.path(), &["check", "--config", &config]);
    assert_eq!(code, 1);
    assert!(stderr.contains("fail"));
    let verdicts = fs::read_to_string(dir.path().join("results/bad.verdicts.tsv")).unwrap();
    assert!(verdicts.contains("\tfail\t"));
}

#[test]
fn missing_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stderr) = bbm(dir.path(), &["ensemble", "--config", "does/not/exist.toml"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("exist.toml"));
    let (code, _) = bbm(dir.path(), &["frobnicate"]);
    assert_eq!(code, 2);
}

#[test]
fn all_inconclusive_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "barrier.toml",
        r#"
[experiment]
name = "barrier"
replications = 10
master_seed = 3
times = [1.0]

[checks]
barrier_level = 0.0
"#,
    );
    let (code, _) = bbm(dir.path(), &["check", "--config", &config]);
    assert_eq!(code, 3);
}

#[test]
fn same_invocation_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "m.toml", &format!("{MINIMAL}series = true\n[statistics]\nrecord = [\"maximum\"]\n"));
    let read_all = |sub: &str| -> Vec<String> {
        let mut names: Vec<_> = fs::read_dir(dir.path().join(sub)).unwrap().map(|e| e.unwrap().path()).collect();
        names.sort();
        names.iter().map(|p| fs::read_to_string(p).unwrap()).collect()
    };
    assert_eq!(bbm(dir.path(), &["ensemble", "--config", &config, "--output", "a", "--workers", "1"]).0, 0);
    assert_eq!(bbm(dir.path(), &["ensemble", "--config", &config, "--output", "b", "--workers", "2"]).0, 0);
    let (a, b) = (read_all("a"), read_all("b"));
    assert_eq!(a.len(), 4);
    // metadata records the worker count, everything else is identical
    for (x, y) in a.iter().zip(&b) {
        if x.contains("\nworkers\t") {
            continue;
        }
        assert_eq!(x, y);
    }
    assert_eq!(bbm(dir.path(), &["ensemble", "--config", &config, "--output", "c", "--seed", "9"]).0, 0);
    let c = read_all("c");
    assert!(c[0].contains("master_seed=9"));
    assert_ne!(c[0].lines().next(), a[0].lines().next());
}

#[test]
fn simulate_and_selftest_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "m.toml", MINIMAL);
    assert_eq!(bbm(dir.path(), &["simulate", "--config", &config]).0, 0);
    let particles = fs::read_to_string(dir.path().join("results/minimal.particles.tsv")).unwrap();
    assert!(particles.lines().nth(1).unwrap().starts_with("index\tlabel"));
    let (code, stderr) = bbm(dir.path(), &["limits-selftest", "--output", "lim"]);
    assert_eq!(code, 0, "{stderr}");
    assert!(dir.path().join("lim/limits_selftest.verdicts.tsv").exists());
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            bbm_cli::parse_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 4);
}

#[test]
fn readme_grammar_parses() {
    let readme = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../README.md")).unwrap();
    let block = readme
        .split("```toml\n")
        .nth(1)
        .and_then(|rest| rest.split("```").next())
        .unwrap();
    let rc = parse_config_str(block).unwrap();
    assert_eq!(rc.experiment.checks.len(), 12);
    assert!(rc.fluctuations.is_some() && rc.overlap_betas.is_some());
}
