//! Descriptive statistics and the goodness-of-fit tests used by the checks.

use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub variance: f64,
    pub se: f64,
    pub count: usize,
}

/// Mean, unbiased variance and `sd/√n`. With one value the variance is zero.
pub fn mean_se(values: &[f64]) -> MeanSe {
    let count = values.len();
    if count == 0 {
        return MeanSe {
            mean: f64::NAN,
            variance: f64::NAN,
            se: f64::NAN,
            count,
        };
    }
    let n = count as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = if count > 1 {
        values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    MeanSe {
        mean,
        variance,
        se: (variance / n).sqrt(),
        count,
    }
}

/// Linear-interpolation quantile (Hyndman-Fan type 7) of unsorted data.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, q)
}

pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Standard error of the sample median via the large-sample normal
/// approximation `1 / (2 f(m) √n)`, with the density estimated from the
/// inter-quantile spacing around the median.
pub fn median_se(sorted: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    let h = 0.5 * n.powf(-0.2);
    let spread = quantile_sorted(sorted, 0.5 + h) - quantile_sorted(sorted, 0.5 - h);
    let density = 2.0 * h / spread;
    1.0 / (2.0 * density * n.sqrt())
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let mx = mean_se(xs).mean;
    let my = mean_se(ys).mean;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Ranks starting at 1; ties share their average rank.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation: Pearson correlation of the ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    pearson(&ranks(xs), &ranks(ys))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
}

/// Ordinary least squares `y = intercept + slope·x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = if xs.len() > 2 {
        let rss: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    LinearFit {
        slope,
        intercept,
        slope_se,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Asymptotic Kolmogorov tail `P(K > λ)` with Stephens' small-sample
/// correction applied by the callers.
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = sign * (-2.0 * k * k * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(values: &[f64], cdf: F) -> TestResult {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let sqrt_n = n.sqrt();
    TestResult {
        statistic: d,
        p_value: kolmogorov_tail((sqrt_n + 0.12 + 0.11 / sqrt_n) * d),
    }
}

/// Two-sample Kolmogorov-Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> TestResult {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = (na * nb / (na + nb)).sqrt();
    TestResult {
        statistic: d,
        p_value: kolmogorov_tail((ne + 0.12 + 0.11 / ne) * d),
    }
}

/// Anderson-Darling test against a fully specified continuous CDF, p-value
/// from the Marsaglia & Marsaglia asymptotic approximation.
pub fn anderson_darling<F: Fn(f64) -> f64>(values: &[f64], cdf: F) -> TestResult {
    let mut u: Vec<f64> = values.iter().map(|&x| cdf(x)).collect();
    u.sort_by(f64::total_cmp);
    let n = u.len();
    let eps = 1e-300;
    let mut s = 0.0;
    for i in 0..n {
        let lo = u[i].max(eps).ln();
        let hi = (1.0 - u[n - 1 - i]).max(eps).ln();
        s += (2 * i + 1) as f64 * (lo + hi);
    }
    let a2 = -(n as f64) - s / n as f64;
    TestResult {
        statistic: a2,
        p_value: (1.0 - ad_asymptotic_cdf(a2)).clamp(0.0, 1.0),
    }
}

fn ad_asymptotic_cdf(z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    if z < 2.0 {
        (-1.2337141 / z).exp() / z.sqrt()
            * (2.00012
                + (0.247105 - (0.0649821 - (0.0347962 - (0.011672 - 0.00168691 * z) * z) * z) * z)
                    * z)
    } else {
        (-(1.0776
            - (2.30695 - (0.43424 - (0.082433 - (0.008056 - 0.0003146 * z) * z) * z) * z) * z)
            .exp())
        .exp()
    }
}

/// Pearson chi-square goodness of fit. `expected` are counts; the caller is
/// responsible for pooling sparse cells. Degrees of freedom: cells − 1 −
/// `fitted_parameters`.
pub fn chi_square(observed: &[f64], expected: &[f64], fitted_parameters: usize) -> TestResult {
    assert_eq!(observed.len(), expected.len());
    let statistic: f64 = observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    let df = observed.len().saturating_sub(1 + fitted_parameters).max(1) as f64;
    let p_value = ChiSquared::new(df)
        .map(|d| 1.0 - d.cdf(statistic))
        .unwrap_or(f64::NAN);
    TestResult { statistic, p_value }
}

pub fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}
