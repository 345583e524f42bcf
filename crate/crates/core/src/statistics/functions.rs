use std::fmt;
use std::str::FromStr;

use super::StatsError;

/// Named scalar functions that configs can refer to by string.
///
/// Grammar: `one`, `const(c)`, `identity`, `indicator(lo,hi)` (closed
/// interval), `poly(c0,c1,c2)` for `c0 + c1 x + c2 x²`, `gauss(mu,sigma)` for
/// `exp(-(x-mu)²/(2σ²))`, and `exp(r)` for `e^{r x}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TestFunction {
    Constant(f64),
    Indicator { lo: f64, hi: f64 },
    Polynomial([f64; 3]),
    GaussianBump { center: f64, width: f64 },
    Exponential(f64),
}

impl TestFunction {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            TestFunction::Constant(c) => c,
            TestFunction::Indicator { lo, hi } => {
                if (lo..=hi).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            TestFunction::Polynomial([c0, c1, c2]) => c0 + x * (c1 + x * c2),
            TestFunction::GaussianBump { center, width } => {
                (-(x - center).powi(2) / (2.0 * width * width)).exp()
            }
            TestFunction::Exponential(r) => (r * x).exp(),
        }
    }

    pub fn as_fn(&self) -> impl Fn(f64) -> f64 + '_ {
        move |x| self.eval(x)
    }

    /// Bounded functions are the ones the functional martingale limit covers.
    pub fn is_bounded(&self) -> bool {
        match *self {
            TestFunction::Constant(_)
            | TestFunction::Indicator { .. }
            | TestFunction::GaussianBump { .. } => true,
            TestFunction::Polynomial([_, c1, c2]) => c1 == 0.0 && c2 == 0.0,
            TestFunction::Exponential(r) => r == 0.0,
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            TestFunction::Constant(c) if c == 1.0 => write!(f, "one"),
            TestFunction::Constant(c) => write!(f, "const({c})"),
            TestFunction::Polynomial([c0, c1, c2]) if c0 == 0.0 && c1 == 1.0 && c2 == 0.0 => {
                write!(f, "identity")
            }
            TestFunction::Indicator { lo, hi } => write!(f, "indicator({lo},{hi})"),
            TestFunction::Polynomial([c0, c1, c2]) => write!(f, "poly({c0},{c1},{c2})"),
            TestFunction::GaussianBump { center, width } => write!(f, "gauss({center},{width})"),
            TestFunction::Exponential(r) => write!(f, "exp({r})"),
        }
    }
}

impl FromStr for TestFunction {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || StatsError::UnknownFunction(s.to_string());
        let s = s.trim();
        match s {
            "one" => return Ok(TestFunction::Constant(1.0)),
            "identity" => return Ok(TestFunction::Polynomial([0.0, 1.0, 0.0])),
            _ => {}
        }
        let open = s.find('(').ok_or_else(unknown)?;
        let inner = s[open + 1..].strip_suffix(')').ok_or_else(unknown)?;
        let args = inner
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| unknown())?;
        let name = &s[..open];
        // indicator bounds may be ±inf, everything else must be finite
        let admissible = |a: &f64| if name == "indicator" { !a.is_nan() } else { a.is_finite() };
        if !args.iter().all(admissible) {
            return Err(unknown());
        }
        match (name, args.as_slice()) {
            ("const", [c]) => Ok(TestFunction::Constant(*c)),
            ("indicator", [lo, hi]) if lo <= hi => Ok(TestFunction::Indicator { lo: *lo, hi: *hi }),
            ("poly", [c0]) => Ok(TestFunction::Polynomial([*c0, 0.0, 0.0])),
            ("poly", [c0, c1]) => Ok(TestFunction::Polynomial([*c0, *c1, 0.0])),
            ("poly", [c0, c1, c2]) => Ok(TestFunction::Polynomial([*c0, *c1, *c2])),
            ("gauss", [mu, sigma]) if *sigma > 0.0 => Ok(TestFunction::GaussianBump {
                center: *mu,
                width: *sigma,
            }),
            ("exp", [r]) => Ok(TestFunction::Exponential(*r)),
            _ => Err(unknown()),
        }
    }
}
