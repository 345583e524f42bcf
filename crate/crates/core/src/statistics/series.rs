use std::io::{self, Write};

/// Values of one statistic for one replication over a time grid.
///
/// `NaN` marks a time where the statistic is undefined (for example the
/// overlap of an extinct population); `undefined` flags those entries.
#[derive(Clone, Debug, PartialEq)]
pub struct StatisticSeries {
    pub statistic: String,
    pub beta: Option<f64>,
    pub a: Option<f64>,
    pub function: Option<String>,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

pub const SERIES_COLUMNS: [&str; 7] = ["replication", "statistic", "beta", "a", "t", "value", "survived"];

impl StatisticSeries {
    pub fn new(statistic: impl Into<String>) -> Self {
        Self {
            statistic: statistic.into(),
            beta: None,
            a: None,
            function: None,
            times: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn push(&mut self, t: f64, value: f64) {
        self.times.push(t);
        self.values.push(value);
    }

    pub fn undefined(&self) -> Vec<bool> {
        self.values.iter().map(|v| v.is_nan()).collect()
    }

    /// Display name including the function, e.g. `growth[indicator(-1,1)]`.
    pub fn qualified_name(&self) -> String {
        match &self.function {
            Some(f) => format!("{}[{}]", self.statistic, f),
            None => self.statistic.clone(),
        }
    }

    /// Writes tab-separated rows
    /// `replication, statistic, beta, a, t, value, survived`; absent β or a
    /// are left empty.
    pub fn write_rows<W: Write>(&self, replication: usize, survived: bool, out: &mut W) -> io::Result<()> {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        let name = self.qualified_name();
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{:?}\t{:?}\t{}",
                replication,
                name,
                opt(self.beta),
                opt(self.a),
                t,
                v,
                u8::from(survived)
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_are_tab_separated() {
        let mut s = StatisticSeries::new("additive");
        s.beta = Some(0.5);
        s.push(1.0, 0.75);
        s.push(2.0, f64::NAN);
        let mut buf = Vec::new();
        s.write_rows(3, true, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "3\tadditive\t0.5\t\t1.0\t0.75\t1\n3\tadditive\t0.5\t\t2.0\tNaN\t1\n");
        assert_eq!(s.undefined(), vec![false, true]);
    }
}
