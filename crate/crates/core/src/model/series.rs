use std::io::{Read, Write};

use chrono::NaiveDate;

use crate::error::{data, domain, Result};

/// Dated log-return history, `x_t = ln S_t - ln S_{t-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    dates: Vec<NaiveDate>,
    returns: Vec<f64>,
}

impl ReturnSeries {
    pub fn new(dates: Vec<NaiveDate>, returns: Vec<f64>) -> Result<Self> {
        if dates.len() != returns.len() {
            return data(format!(
                "{} dates for {} returns",
                dates.len(),
                returns.len()
            ));
        }
        if let Some(w) = dates.windows(2).find(|w| w[1] <= w[0]) {
            return data(format!("dates not strictly increasing at {}", w[1]));
        }
        if let Some(pos) = returns.iter().position(|r| !r.is_finite()) {
            return data(format!("non-finite return at row {pos}"));
        }
        Ok(ReturnSeries { dates, returns })
    }

    /// Undated series; dates are synthesized as consecutive calendar days
    /// from 2000-01-01 so ordering invariants still hold.
    pub fn from_returns(returns: Vec<f64>) -> Result<Self> {
        let start = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
        let dates = (0..returns.len())
            .map(|k| start + chrono::Days::new(k as u64))
            .collect();
        ReturnSeries::new(dates, returns)
    }

    /// Log-returns of a dated price path; the first price only anchors.
    pub fn from_prices(dates: &[NaiveDate], prices: &[f64]) -> Result<Self> {
        if dates.len() != prices.len() || prices.len() < 2 {
            return data("need matching dates and at least two prices");
        }
        if prices.iter().any(|p| !(*p > 0.0)) {
            return data("prices must be positive");
        }
        let returns = prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
        ReturnSeries::new(dates[1..].to_vec(), returns)
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn returns(&self) -> &[f64] {
        &self.returns
    }

    /// Sub-series over the index range `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Result<ReturnSeries> {
        if start > end || end > self.len() {
            return domain(format!("slice {start}..{end} out of range for length {}", self.len()));
        }
        Ok(ReturnSeries {
            dates: self.dates[start..end].to_vec(),
            returns: self.returns[start..end].to_vec(),
        })
    }

    /// Index of the first date not earlier than `date`.
    pub fn index_on_or_after(&self, date: NaiveDate) -> usize {
        self.dates.partition_point(|d| *d < date)
    }

    /// Sub-series of the `len` returns strictly before `date`.
    pub fn window_before(&self, date: NaiveDate, len: usize) -> Result<ReturnSeries> {
        let end = self.index_on_or_after(date);
        if end < len {
            return data(format!(
                "only {end} returns before {date}, {len} required"
            ));
        }
        self.slice(end - len, end)
    }

    /// Parse the `date,log_return` CSV format (ISO-8601 dates).
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() < 2 || &headers[0] != "date" || &headers[1] != "log_return" {
            return data("return series header must be `date,log_return`");
        }
        let mut dates = Vec::new();
        let mut returns = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
                .map_err(|e| crate::Error::Data(format!("row {row}: bad date {:?}: {e}", &rec[0])))?;
            let value: f64 = rec[1]
                .parse()
                .map_err(|e| crate::Error::Data(format!("row {row}: bad return {:?}: {e}", &rec[1])))?;
            dates.push(date);
            returns.push(value);
        }
        ReturnSeries::new(dates, returns)
    }

    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "date,log_return")?;
        for (d, r) in self.dates.iter().zip(&self.returns) {
            writeln!(writer, "{},{}", d.format("%Y-%m-%d"), r)?;
        }
        Ok(())
    }
}

/// A string of restart-counter states `i_{t_start}, ..., i_{t_end}` with the
/// probability weight it was drawn or enumerated with.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartPath {
    pub t_start: usize,
    pub states: Vec<u64>,
    pub weight: f64,
}

impl RestartPath {
    pub fn new(t_start: usize, states: Vec<u64>, weight: f64) -> Result<Self> {
        let path = RestartPath { t_start, states, weight };
        path.validate()?;
        Ok(path)
    }

    /// Last covered time index (inclusive).
    pub fn t_end(&self) -> usize {
        self.t_start + self.states.len().saturating_sub(1)
    }

    /// State at absolute time `t`, if covered.
    pub fn state_at(&self, t: usize) -> Option<u64> {
        t.checked_sub(self.t_start).and_then(|k| self.states.get(k).copied())
    }

    /// Each consecutive pair is either a restart to 1 or an increment.
    pub fn follows_chain(states: &[u64]) -> bool {
        states.iter().all(|&s| s >= 1) && states.windows(2).all(|w| w[1] == 1 || w[1] == w[0] + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.states.is_empty() {
            return domain("restart path is empty");
        }
        if !Self::follows_chain(&self.states) {
            return domain(format!("states {:?} leave the chain support", self.states));
        }
        if !(0.0..=1.0).contains(&self.weight) {
            return domain(format!("weight {} outside [0, 1]", self.weight));
        }
        Ok(())
    }

    /// Concatenate with a continuation starting right after `t_end`.
    pub fn extend(&self, tail: &[u64], weight: f64) -> Result<RestartPath> {
        let mut states = self.states.clone();
        states.extend_from_slice(tail);
        RestartPath::new(self.t_start, states, weight)
    }
}
