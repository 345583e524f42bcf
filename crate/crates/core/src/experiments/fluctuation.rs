use rayon::prelude::*;

use crate::bbm::{simulate, Continuation, SimConfig};
use crate::inference::{anderson_darling, ks_one_sample, standard_normal_cdf};
use crate::limits::{
    critical_z_proxy, gaussian_fluctuation_variance, hill_sensitivity, hill_tail_index, rescale_fluctuation,
    FluctuationSpec, Regime, DEFAULT_HILL_FRACTION,
};
use crate::sampling::{Lane, RngStream};
use crate::statistics::{additive_martingale, growth_rate, BETA_C};

use super::ensemble::with_workers;
use super::{ExperimentConfig, ExperimentError, Status, Verdict};

/// Inverse temperature, horizon `t` and proxy gap `Δ` of a fluctuation run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluctuationSettings {
    pub beta: f64,
    pub t: f64,
    pub delta: f64,
}

/// One replication of a fluctuation run. Undefined entries are NaN.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluctuationSample {
    pub replication: usize,
    pub w_t: f64,
    /// `W_{t+Δ}(β)`, the proxy for `W_∞(β)`.
    pub w_proxy: f64,
    /// `W_t(2β)` (subcritical) or the `Z_∞` proxy `√(π/2)√t W_t(√2)` (boundary).
    pub variance_proxy: f64,
    pub rescaled: f64,
    pub sigma: f64,
    pub standardized: f64,
}

pub const FLUCTUATION_COLUMNS: [&str; 7] = [
    "replication", "w_t", "w_proxy", "variance_proxy", "rescaled", "sigma", "standardized",
];

#[derive(Clone, Debug)]
pub struct FluctuationReport {
    pub settings: FluctuationSettings,
    pub spec: FluctuationSpec,
    pub workers: usize,
    pub truncated: usize,
    /// Replications with a non-empty population at `t`.
    pub survivors: usize,
    pub samples: Vec<FluctuationSample>,
    /// `(fraction, k, estimate)`; empty outside the extremal regime.
    pub hill: Vec<(f64, usize, f64)>,
    pub verdicts: Vec<Verdict>,
}

/// Simulates to `t`, continues every particle alive at `t` for `Δ`, and
/// studies `rate(t)·(W_{t+Δ}(β) − W_t(β))`.
///
/// Gaussian regimes standardize each replication by its own σ, computed
/// from `W_t(2β)` (subcritical) or the Z proxy `√(π/2)√t W_t(√2)` (boundary),
/// both measurable at time `t`, and test normality with Kolmogorov-Smirnov and
/// Anderson-Darling. The extremal regime estimates the tail index of the
/// positive part by Hill's estimator and compares it with `√2/β`.
///
/// Simulation streams match [`super::run_ensemble`]; continuations use
/// their own lane.
pub fn fluctuation_experiment(
    cfg: &ExperimentConfig,
    settings: &FluctuationSettings,
) -> Result<FluctuationReport, ExperimentError> {
    let FluctuationSettings { beta, t, delta } = *settings;
    if !(t > 0.0 && t.is_finite() && delta > 0.0 && delta.is_finite()) {
        return Err(ExperimentError::config(format!(
            "fluctuations need t > 0 and delta > 0 (got t = {t}, delta = {delta})"
        )));
    }
    if cfg.replications == 0 {
        return Err(ExperimentError::config("replications must be at least 1"));
    }
    cfg.tests.validate()?;
    let k = cfg.simulation.offspring.moments().k;
    let spec = FluctuationSpec::for_beta(beta, k)?;
    let betas = [beta];
    let mut sim = SimConfig::new(t, vec![t], cfg.simulation.offspring.clone());
    sim.particle_cap = cfg.simulation.particle_cap;
    let end = t + delta;

    let (workers, outcomes) = with_workers(cfg.workers, || {
        (0..cfg.replications)
            .into_par_iter()
            .map_init(
                || Continuation::new(&sim.offspring, &betas),
                |cont, i| -> Result<Option<FluctuationSample>, ExperimentError> {
                    let mut rng = RngStream::with_lane(cfg.master_seed, Lane::Simulation, i as u64);
                    let real = simulate(&sim, &mut rng)?;
                    if real.truncated() {
                        return Ok(None);
                    }
                    let snap = real.alive_at(t)?;
                    let w_t = additive_martingale(snap, beta);
                    let mut rng = RngStream::with_lane(cfg.master_seed, Lane::Continuation, i as u64);
                    cont.reset();
                    for e in &snap.entries {
                        cont.extend(e.position, delta, &mut rng);
                    }
                    let w_proxy = (cont.log_sum(0) - growth_rate(beta) * end).exp();
                    let rescaled = rescale_fluctuation(&spec, t, w_t, w_proxy)?;
                    let variance_proxy = match spec.regime() {
                        Regime::Subcritical => additive_martingale(snap, 2.0 * beta),
                        Regime::Boundary => critical_z_proxy(t, additive_martingale(snap, BETA_C)),
                        Regime::Extremal => f64::NAN,
                    };
                    let sigma = if spec.regime() == Regime::Extremal {
                        f64::NAN
                    } else {
                        gaussian_fluctuation_variance(&spec, variance_proxy)?.sqrt()
                    };
                    let standardized = if sigma > 0.0 { rescaled / sigma } else { f64::NAN };
                    Ok(Some(FluctuationSample {
                        replication: i,
                        w_t,
                        w_proxy,
                        variance_proxy,
                        rescaled,
                        sigma,
                        standardized,
                    }))
                },
            )
            .collect::<Result<Vec<_>, _>>()
    })?;
    let outcomes = outcomes?;
    let truncated = outcomes.iter().filter(|o| o.is_none()).count();
    let samples: Vec<FluctuationSample> = outcomes.into_iter().flatten().collect();
    let survivors = samples.iter().filter(|s| s.w_t > 0.0).count();

    let mut report = FluctuationReport {
        settings: *settings,
        spec,
        workers,
        truncated,
        survivors,
        samples,
        hill: Vec::new(),
        verdicts: Vec::new(),
    };
    evaluate(cfg, &mut report);
    Ok(report)
}

fn evaluate(cfg: &ExperimentConfig, report: &mut FluctuationReport) {
    let tests = &cfg.tests;
    let t = Some(report.settings.t);
    let name = "fluctuations";
    match report.spec.regime() {
        Regime::Subcritical | Regime::Boundary => {
            let z: Vec<f64> = report
                .samples
                .iter()
                .map(|s| s.standardized)
                .filter(|v| v.is_finite())
                .collect();
            if z.len() < tests.min_survivors {
                report.verdicts.push(Verdict::inconclusive(
                    name,
                    "standardized residuals",
                    t,
                    format!("{} usable replications, need {}", z.len(), tests.min_survivors),
                ));
                return;
            }
            let ks = ks_one_sample(&z, standard_normal_cdf);
            let ad = anderson_darling(&z, standard_normal_cdf);
            let regime = report.spec.regime();
            report.verdicts.push(
                Verdict::p_value(name, format!("KS normality ({regime})"), t, ks.p_value, ks.statistic, tests.significance)
                    .with_detail(format!("n = {}", z.len())),
            );
            report.verdicts.push(
                Verdict::p_value(name, format!("AD normality ({regime})"), t, ad.p_value, ad.statistic, tests.significance)
                    .with_detail(format!("n = {}", z.len())),
            );
        }
        Regime::Extremal => {
            let positive: Vec<f64> = report
                .samples
                .iter()
                .map(|s| s.rescaled)
                .filter(|v| v.is_finite() && *v > 0.0)
                .collect();
            let expected = report.spec.stable_index();
            let label = "Hill index of positive rescaled fluctuations";
            let k = ((positive.len() as f64) * DEFAULT_HILL_FRACTION).round() as usize;
            report.hill = hill_sensitivity(&positive)
                .into_iter()
                .filter_map(|(f, k, r)| r.ok().map(|a| (f, k, a)))
                .collect();
            match hill_tail_index(&positive, k) {
                Ok(alpha) => {
                    let se = alpha / (k as f64).sqrt();
                    let sensitivity: Vec<String> =
                        report.hill.iter().map(|(f, k, a)| format!("{f}:{k}:{a:.4}")).collect();
                    report.verdicts.push(Verdict {
                        check: name.into(),
                        label: label.into(),
                        t,
                        expected,
                        measured: alpha,
                        se,
                        threshold: tests.hill_tolerance,
                        status: if (alpha - expected).abs() <= tests.hill_tolerance {
                            Status::Pass
                        } else {
                            Status::Fail
                        },
                        detail: format!(
                            "k = {k} of {} positive; sensitivity {}",
                            positive.len(),
                            sensitivity.join(" ")
                        ),
                    });
                }
                Err(e) => report.verdicts.push(Verdict::inconclusive(name, label, t, e.to_string())),
            }
        }
    }
}
