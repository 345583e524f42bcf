use crate::inference::{linear_fit, mean_se};
use crate::limits::{hill_tail_index, Regime, DEFAULT_HILL_FRACTION};
use crate::statistics::BETA_C;

use super::checks::second_moment;
use super::ensemble::{run_ensemble, EnsembleSummary};
use super::{ExperimentConfig, ExperimentError, StatKey, Statistic, Status, Verdict};

const NAME: &str = "overlap_decay";

/// Decay of `ν_{β,t}([a,1])` in `t` for every β of the grid (all below √2)
/// and every level `a`. Decay means are taken on the event of survival.
///
/// The logarithm of the mean overlap, corrected by the regime's polynomial
/// factor, is regressed on `t` and the slope compared with
/// `−(1−β²)a` (β < √2/2), `−a/2` after adding `½ ln(at)` (β = √2/2), or
/// `−(√2−β)² a` after adding `(3β/√2) ln(at)` (β > √2/2). Every run also
/// checks the exact identity `E[e^{(1−β²)at} ν W_t(β)²] = E[W_{(1−a)t}(β)²]`,
/// and the extremal regime estimates the tail index of the rescaled overlap
/// at the largest time against `√2/(2β)`.
pub fn overlap_decay_experiment(cfg: &ExperimentConfig) -> Result<EnsembleSummary, ExperimentError> {
    if cfg.a_grid.is_empty() || cfg.betas.values().is_empty() {
        return Err(ExperimentError::config("overlap decay needs a non-empty beta grid and a grid"));
    }
    if let Some(&b) = cfg.betas.values().iter().find(|&&b| b >= BETA_C) {
        return Err(ExperimentError::config(format!("overlap decay needs beta < sqrt(2) (got {b})")));
    }
    let mut cfg = cfg.clone();
    for &beta in cfg.betas.values() {
        for &a in &cfg.a_grid {
            for &t in &cfg.times {
                cfg.statistics.push(StatKey::new(Statistic::Overlap { beta, a }, t));
                cfg.statistics.push(StatKey::new(Statistic::AdditiveSquared { beta }, t));
            }
        }
    }
    let mut summary = run_ensemble(&cfg)?;
    let mut verdicts = Vec::new();
    for &beta in cfg.betas.values() {
        for &a in &cfg.a_grid {
            verdicts.extend(decay_verdicts(&summary, beta, a)?);
        }
    }
    summary.verdicts.extend(verdicts);
    Ok(summary)
}

fn decay_verdicts(summary: &EnsembleSummary, beta: f64, a: f64) -> Result<Vec<Verdict>, ExperimentError> {
    let cfg = &summary.config;
    let tests = &cfg.tests;
    let k = cfg.simulation.offspring.moments().k;
    let regime = Regime::of(beta).expect("beta below sqrt(2)");
    let mut out = Vec::new();

    let times: Vec<f64> = cfg.times.iter().copied().filter(|&t| t > 0.0).collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &t in &times {
        let overlap = StatKey::new(Statistic::Overlap { beta, a }, t);
        let nu = summary.values(&overlap)?;
        let conditioned: Vec<f64> = nu
            .iter()
            .zip(&summary.survived)
            .filter(|(v, &s)| s && v.is_finite())
            .map(|(&v, _)| v)
            .collect();
        if conditioned.len() < tests.min_survivors {
            out.push(Verdict::inconclusive(
                NAME,
                format!("overlap slope beta={beta} a={a}"),
                Some(t),
                format!("{} survivors, need {}", conditioned.len(), tests.min_survivors),
            ));
            return Ok(out);
        }
        let mean_nu = mean_se(&conditioned).mean;
        let correction = match regime {
            Regime::Subcritical => 0.0,
            Regime::Boundary => 0.5 * (a * t).ln(),
            Regime::Extremal => 3.0 * beta / BETA_C * (a * t).ln(),
        };
        xs.push(t);
        ys.push(mean_nu.ln() + correction);

        // exact finite-t identity from the branching property at a·t
        let w2 = summary.values(&StatKey::new(Statistic::AdditiveSquared { beta }, t))?;
        let factor = ((1.0 - beta * beta) * a * t).exp();
        let products: Vec<f64> = nu
            .iter()
            .zip(w2)
            .map(|(&nu, &w2)| if w2 == 0.0 { 0.0 } else { factor * nu * w2 })
            .collect();
        let m = mean_se(&products);
        let expected = tests.oracle_scale * second_moment(beta, k, (1.0 - a) * t);
        out.push(
            Verdict::within_se(
                NAME,
                format!("mean e^((1-b^2)at) nu W^2 beta={beta} a={a}"),
                Some(t),
                expected,
                m.mean,
                m.se,
                tests.se_multiplier,
            )
            .with_detail(format!("n = {}", m.count)),
        );
    }
    if xs.len() < 2 {
        out.push(Verdict::inconclusive(
            NAME,
            format!("overlap slope beta={beta} a={a}"),
            None,
            "needs at least two positive times",
        ));
        return Ok(out);
    }
    let expected = tests.oracle_scale
        * match regime {
            Regime::Subcritical => -(1.0 - beta * beta) * a,
            Regime::Boundary => -a / 2.0,
            Regime::Extremal => -(BETA_C - beta).powi(2) * a,
        };
    let fit = linear_fit(&xs, &ys);
    out.push(
        Verdict::within_relative(
            NAME,
            format!("overlap slope beta={beta} a={a} ({regime})"),
            None,
            expected,
            fit.slope,
            fit.slope_se,
            tests.slope_tolerance,
        )
        .with_detail(format!("times {:?}", xs)),
    );

    if regime == Regime::Extremal {
        let t = *times.last().expect("non-empty");
        let scale = (a * t).powf(3.0 * beta / BETA_C) * ((BETA_C - beta).powi(2) * a * t).exp();
        let rescaled: Vec<f64> = summary
            .values(&StatKey::new(Statistic::Overlap { beta, a }, t))?
            .iter()
            .zip(&summary.survived)
            .filter(|(v, &s)| s && v.is_finite() && **v > 0.0)
            .map(|(v, _)| scale * v)
            .collect();
        let k = ((rescaled.len() as f64) * DEFAULT_HILL_FRACTION).round() as usize;
        let expected = BETA_C / (2.0 * beta);
        let label = format!("Hill index of rescaled overlap beta={beta} a={a}");
        match hill_tail_index(&rescaled, k) {
            Ok(alpha) => out.push(Verdict {
                check: NAME.into(),
                label,
                t: Some(t),
                expected,
                measured: alpha,
                se: alpha / (k as f64).sqrt(),
                threshold: tests.hill_tolerance,
                status: if (alpha - expected).abs() <= tests.hill_tolerance {
                    Status::Pass
                } else {
                    Status::Fail
                },
                detail: format!("k = {k}"),
            }),
            Err(e) => out.push(Verdict::inconclusive(NAME, label, Some(t), e.to_string())),
        }
    }
    Ok(out)
}
