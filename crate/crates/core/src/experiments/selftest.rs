use std::f64::consts::SQRT_2;

use rand::Rng;
use statrs::function::gamma::gamma;

use crate::inference::{ks_two_sample, mean_se, median_se, quantile_sorted};
use crate::limits::{hill_tail_index, sample_limit_maximum, GumbelMixtureSpec};
use crate::sampling::{sample_stable_positive, Lane, RngStream, StableMethod, StableSpec, DEFAULT_SERIES_FLOOR};

use super::{ExperimentError, Status, Verdict};

const NAME: &str = "limits_selftest";

#[derive(Clone, Debug, PartialEq)]
pub struct SelftestSettings {
    pub master_seed: u64,
    /// Draws per stable and Pareto sample.
    pub draws: usize,
    pub gumbel_draws: usize,
    pub series_floor: f64,
    /// Order statistics used by the Hill checks.
    pub hill_k: usize,
    pub significance: f64,
    pub se_multiplier: f64,
    pub pareto_tolerance: f64,
    pub stable_hill_tolerance: f64,
}

impl Default for SelftestSettings {
    fn default() -> Self {
        Self {
            master_seed: 0,
            draws: 100_000,
            gumbel_draws: 1_000_000,
            series_floor: DEFAULT_SERIES_FLOOR,
            hill_k: 1000,
            significance: 0.01,
            se_multiplier: 4.0,
            pareto_tolerance: 0.15,
            stable_hill_tolerance: 0.1,
        }
    }
}

fn stream(settings: &SelftestSettings, index: u64) -> RngStream {
    RngStream::with_lane(settings.master_seed, Lane::Limits, index)
}

fn tolerance_verdict(label: &str, expected: f64, measured: f64, se: f64, tolerance: f64, detail: String) -> Verdict {
    Verdict {
        check: NAME.into(),
        label: label.into(),
        t: None,
        expected,
        measured,
        se,
        threshold: tolerance,
        status: if (measured - expected).abs() <= tolerance {
            Status::Pass
        } else {
            Status::Fail
        },
        detail,
    }
}

/// Checks the limit-object samplers against closed forms:
/// series and direct positive-stable samplers agree (two-sample KS at
/// α = 0.7), the stable Laplace transform at α = 0.5, the median of the
/// Gumbel mixture with `z = 1, C = 1`, and Hill estimates on exact Pareto(1.5)
/// and on stable(0.7) draws.
pub fn limits_selftest(settings: &SelftestSettings) -> Result<Vec<Verdict>, ExperimentError> {
    if settings.draws <= settings.hill_k || settings.gumbel_draws < 2 {
        return Err(ExperimentError::config("selftest needs draws > hill_k and at least two Gumbel draws"));
    }
    let mut out = Vec::new();
    let n = settings.draws;

    let spec = StableSpec::new(0.7, 1.0)?;
    let mut rng = stream(settings, 0);
    let series: Vec<f64> = (0..n)
        .map(|_| sample_stable_positive(&spec, StableMethod::Series { floor: settings.series_floor }, &mut rng))
        .collect();
    let mut rng = stream(settings, 1);
    let direct: Vec<f64> = (0..n)
        .map(|_| sample_stable_positive(&spec, StableMethod::Direct, &mut rng))
        .collect();
    let ks = ks_two_sample(&series, &direct);
    out.push(
        Verdict::p_value(NAME, "stable series vs direct (alpha=0.7)", None, ks.p_value, ks.statistic, settings.significance)
            .with_detail(format!("series floor {}", settings.series_floor)),
    );

    let half = StableSpec::new(0.5, 1.0)?;
    let mut rng = stream(settings, 2);
    let laplace: Vec<f64> = (0..n)
        .map(|_| (-sample_stable_positive(&half, StableMethod::Direct, &mut rng)).exp())
        .collect();
    let m = mean_se(&laplace);
    out.push(Verdict::within_se(
        NAME,
        "stable Laplace transform E exp(-S) (alpha=0.5)",
        None,
        (-gamma(0.5)).exp(),
        m.mean,
        m.se,
        settings.se_multiplier,
    ));

    let gumbel = GumbelMixtureSpec::new(vec![1.0], 1.0)?;
    let mut rng = stream(settings, 3);
    let mut maxima: Vec<f64> = (0..settings.gumbel_draws)
        .map(|_| sample_limit_maximum(&gumbel, &mut rng))
        .collect();
    maxima.sort_by(f64::total_cmp);
    out.push(Verdict::within_se(
        NAME,
        "Gumbel mixture median (z=1, C=1)",
        None,
        -(2f64.ln().ln()) / SQRT_2,
        quantile_sorted(&maxima, 0.5),
        median_se(&maxima),
        settings.se_multiplier,
    ));

    let alpha = 1.5;
    let mut rng = stream(settings, 4);
    let pareto: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            (1.0 - u).powf(-1.0 / alpha)
        })
        .collect();
    let k = settings.hill_k;
    let estimate = hill_tail_index(&pareto, k)?;
    out.push(tolerance_verdict(
        "Hill index on Pareto(1.5)",
        alpha,
        estimate,
        estimate / (k as f64).sqrt(),
        settings.pareto_tolerance,
        format!("n = {n}, k = {k}"),
    ));

    let estimate = hill_tail_index(&direct, k)?;
    out.push(tolerance_verdict(
        "Hill index on stable(0.7)",
        0.7,
        estimate,
        estimate / (k as f64).sqrt(),
        settings.stable_hill_tolerance,
        format!("n = {n}, k = {k}"),
    ));
    Ok(out)
}
