use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Not enough data, or a vacuous bound.
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        })
    }
}

/// Outcome of one comparison, with the numbers it was decided on.
///
/// For mean comparisons `threshold` is the admissible absolute deviation;
/// for distributional tests `measured` is the p-value and `threshold` the
/// significance level.
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub check: String,
    pub label: String,
    pub t: Option<f64>,
    pub expected: f64,
    pub measured: f64,
    pub se: f64,
    pub threshold: f64,
    pub status: Status,
    pub detail: String,
}

pub const VERDICT_COLUMNS: [&str; 9] = [
    "check", "label", "t", "expected", "measured", "se", "threshold", "status", "detail",
];

impl Verdict {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// `|measured − expected| ≤ multiplier·se`.
    pub fn within_se(
        check: &str,
        label: impl Into<String>,
        t: Option<f64>,
        expected: f64,
        measured: f64,
        se: f64,
        multiplier: f64,
    ) -> Self {
        let threshold = multiplier * se;
        let status = if !(measured.is_finite() && se.is_finite()) {
            Status::Inconclusive
        } else if (measured - expected).abs() <= threshold {
            Status::Pass
        } else {
            Status::Fail
        };
        Self {
            check: check.into(),
            label: label.into(),
            t,
            expected,
            measured,
            se,
            threshold,
            status,
            detail: format!("deviation {:.3} SE", deviation_in_se(measured, expected, se)),
        }
    }

    /// `|measured − expected| ≤ tolerance·|expected|`.
    pub fn within_relative(
        check: &str,
        label: impl Into<String>,
        t: Option<f64>,
        expected: f64,
        measured: f64,
        se: f64,
        tolerance: f64,
    ) -> Self {
        let threshold = tolerance * expected.abs();
        let status = if !measured.is_finite() {
            Status::Inconclusive
        } else if (measured - expected).abs() <= threshold {
            Status::Pass
        } else {
            Status::Fail
        };
        Self {
            check: check.into(),
            label: label.into(),
            t,
            expected,
            measured,
            se,
            threshold,
            status,
            detail: format!("relative error {:.4}", (measured - expected) / expected),
        }
    }

    /// Distributional test: passes when `p_value > significance`.
    pub fn p_value(
        check: &str,
        label: impl Into<String>,
        t: Option<f64>,
        p_value: f64,
        statistic: f64,
        significance: f64,
    ) -> Self {
        let status = if p_value.is_nan() {
            Status::Inconclusive
        } else if p_value > significance {
            Status::Pass
        } else {
            Status::Fail
        };
        Self {
            check: check.into(),
            label: label.into(),
            t,
            expected: significance,
            measured: p_value,
            se: f64::NAN,
            threshold: significance,
            status,
            detail: format!("statistic {statistic}"),
        }
    }

    pub fn inconclusive(check: &str, label: impl Into<String>, t: Option<f64>, detail: impl Into<String>) -> Self {
        Self {
            check: check.into(),
            label: label.into(),
            t,
            expected: f64::NAN,
            measured: f64::NAN,
            se: f64::NAN,
            threshold: f64::NAN,
            status: Status::Inconclusive,
            detail: detail.into(),
        }
    }

    pub fn with_detail(mut self, extra: impl AsRef<str>) -> Self {
        if self.detail.is_empty() {
            self.detail = extra.as_ref().to_string();
        } else {
            self.detail = format!("{}; {}", self.detail, extra.as_ref());
        }
        self
    }
}

fn deviation_in_se(measured: f64, expected: f64, se: f64) -> f64 {
    if se > 0.0 {
        (measured - expected) / se
    } else if measured == expected {
        0.0
    } else {
        f64::INFINITY.copysign(measured - expected)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.status.to_string().to_uppercase(), self.label)?;
        if let Some(t) = self.t {
            write!(f, " t={t}")?;
        }
        write!(
            f,
            ": expected {:.6} measured {:.6} se {:.3e} threshold {:.3e} ({})",
            self.expected, self.measured, self.se, self.threshold, self.detail
        )
    }
}

/// Exit status convention over a set of verdicts: any failure is a failure,
/// and only an all-inconclusive set is inconclusive.
pub fn overall_status(verdicts: &[Verdict]) -> Status {
    if verdicts.iter().any(|v| v.status == Status::Fail) {
        Status::Fail
    } else if !verdicts.is_empty() && verdicts.iter().all(|v| v.status == Status::Inconclusive) {
        Status::Inconclusive
    } else {
        Status::Pass
    }
}
