//! Log-domain accumulation and adaptive quadrature.

/// Streaming `ln Σ e^{v_i}` with a running maximum.
///
/// Terms are added in call order, so a fixed insertion order gives a
/// bit-reproducible result. An empty accumulator has log-sum `-∞`.
#[derive(Clone, Copy, Debug)]
pub struct LogSumExp {
    max: f64,
    scaled: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumExp {
    pub const fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        if v == f64::NEG_INFINITY {
            return;
        }
        if v <= self.max {
            self.scaled += (v - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - v).exp() + 1.0;
            self.max = v;
        }
    }

    /// Merges another accumulator, as if its terms were added here.
    pub fn merge(&mut self, other: &LogSumExp) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        if other.max <= self.max {
            self.scaled += other.scaled * (other.max - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - other.max).exp() + other.scaled;
            self.max = other.max;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.max == f64::NEG_INFINITY
    }

    /// `ln Σ e^{v_i}`, `-∞` when empty.
    pub fn value(&self) -> f64 {
        if self.is_empty() {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

pub fn log_sum_exp<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = LogSumExp::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Signed sum `Σ s_i e^{v_i}` kept as two log-domain accumulators.
#[derive(Clone, Copy, Debug, Default)]
pub struct SignedLogSum {
    pub positive: LogSumExp,
    pub negative: LogSumExp,
}

impl SignedLogSum {
    /// Adds `weight · e^{log_magnitude}`.
    #[inline]
    pub fn add(&mut self, log_magnitude: f64, weight: f64) {
        if weight > 0.0 {
            self.positive.add(log_magnitude + weight.ln());
        } else if weight < 0.0 {
            self.negative.add(log_magnitude + (-weight).ln());
        }
    }

    /// `e^{-shift} Σ s_i e^{v_i}`.
    pub fn value_shifted(&self, shift: f64) -> f64 {
        let p = if self.positive.is_empty() {
            0.0
        } else {
            (self.positive.value() - shift).exp()
        };
        let n = if self.negative.is_empty() {
            0.0
        } else {
            (self.negative.value() - shift).exp()
        };
        p - n
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureFailure {
    pub estimate: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

impl std::fmt::Display for QuadratureFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "adaptive quadrature did not converge: estimate {} with error estimate {} after {} evaluations",
            self.estimate, self.error_estimate, self.evaluations
        )
    }
}

impl std::error::Error for QuadratureFailure {}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to relative tolerance
/// `rel_tol` (with a tiny absolute floor for integrals that vanish).
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Result<f64, QuadratureFailure> {
    if a == b {
        return Ok(0.0);
    }
    const MAX_DEPTH: u32 = 48;
    const MAX_EVALUATIONS: usize = 2_000_000;

    struct State<'f, F> {
        f: &'f F,
        evaluations: usize,
        failed: bool,
        error: f64,
    }

    fn recurse<F: Fn(f64) -> f64>(
        st: &mut State<'_, F>,
        (a, fa): (f64, f64),
        (m, fm): (f64, f64),
        (b, fb): (f64, f64),
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = (st.f)(lm);
        let frm = (st.f)(rm);
        st.evaluations += 2;
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol || !delta.is_finite() {
            st.error += delta.abs() / 15.0;
            return left + right + delta / 15.0;
        }
        if depth == 0 || st.evaluations > MAX_EVALUATIONS {
            st.failed = true;
            st.error += delta.abs() / 15.0;
            return left + right + delta / 15.0;
        }
        recurse(st, (a, fa), (lm, flm), (m, fm), left, tol / 2.0, depth - 1)
            + recurse(st, (m, fm), (rm, frm), (b, fb), right, tol / 2.0, depth - 1)
    }

    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut st = State {
        f: &f,
        evaluations: 3,
        failed: false,
        error: 0.0,
    };
    // A coarse pass sets the absolute target from the integral's magnitude.
    let coarse = recurse(&mut st, (a, fa), (m, fm), (b, fb), whole, f64::INFINITY, 0);
    let tol = (rel_tol * coarse.abs()).max(1e-300);
    st.evaluations = 3;
    st.failed = false;
    st.error = 0.0;
    let value = recurse(&mut st, (a, fa), (m, fm), (b, fb), whole, tol, MAX_DEPTH);
    if st.failed || !value.is_finite() {
        return Err(QuadratureFailure {
            estimate: value,
            error_estimate: st.error,
            evaluations: st.evaluations,
        });
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_log_sum_is_negative_infinity() {
        assert_eq!(LogSumExp::new().value(), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(std::iter::empty()), f64::NEG_INFINITY);
    }

    #[test]
    fn handles_huge_exponents() {
        let v = log_sum_exp([700.0, 700.0, 1000.0]);
        assert!((v - 1000.0).abs() < 1e-12);
        let v = log_sum_exp([68.0, 68.0]);
        assert!((v - (68.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn signed_sum_cancels() {
        let mut s = SignedLogSum::default();
        s.add(1.0, 2.0);
        s.add(1.0, -2.0);
        assert!(s.value_shifted(0.0).abs() < 1e-15);
        s.add(0.0, -1.5);
        assert!((s.value_shifted(0.0) + 1.5).abs() < 1e-12);
    }

    #[test]
    fn integrates_exponential_to_high_accuracy() {
        let exact = 1.0 - (-2.0f64).exp();
        let got = integrate(|s| (-s).exp(), 0.0, 2.0, 1e-12).unwrap();
        assert!(((got - exact) / exact).abs() < 1e-11);
        let exact = 1.0 - 2.0 * (-1.0f64).exp();
        let got = integrate(|s| s * (-s).exp(), 0.0, 1.0, 1e-10).unwrap();
        assert!(((got - exact) / exact).abs() < 1e-9);
    }

    #[test]
    fn non_integrable_singularity_fails() {
        let err = integrate(|s| 1.0 / s, 0.0, 1.0, 1e-9).unwrap_err();
        assert!(err.evaluations > 0);
    }

    proptest! {
        #[test]
        fn matches_naive_sum(xs in prop::collection::vec(-30.0f64..30.0, 1..50)) {
            let naive = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
            let lse = log_sum_exp(xs.iter().copied());
            prop_assert!((naive - lse).abs() < 1e-12 * naive.abs().max(1.0));
        }

        #[test]
        fn merge_equals_sequential(xs in prop::collection::vec(-50.0f64..50.0, 0..40),
                                   ys in prop::collection::vec(-50.0f64..50.0, 0..40)) {
            let mut a = LogSumExp::new();
            xs.iter().for_each(|&x| a.add(x));
            let mut b = LogSumExp::new();
            ys.iter().for_each(|&y| b.add(y));
            a.merge(&b);
            let all = log_sum_exp(xs.iter().chain(&ys).copied());
            if all.is_finite() {
                prop_assert!((a.value() - all).abs() < 1e-12 * all.abs().max(1.0));
            } else {
                prop_assert!(a.is_empty());
            }
        }
    }
}
