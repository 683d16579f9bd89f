use std::io::{BufRead, BufReader, Read};

use chrono::{Datelike, NaiveDate, Weekday};

use crate::error::{data, Result};

/// Sorted set of open-market days.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradingCalendar {
    days: Vec<NaiveDate>,
}

impl TradingCalendar {
    pub fn new(mut days: Vec<NaiveDate>) -> Self {
        days.sort();
        days.dedup();
        TradingCalendar { days }
    }

    /// Monday-to-Friday calendar without holidays.
    pub fn weekdays(start: NaiveDate, end: NaiveDate) -> Self {
        let days = start
            .iter_days()
            .take_while(|d| *d <= end)
            .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
            .collect();
        TradingCalendar { days }
    }

    /// One ISO date per line; blank lines and `#` comments are ignored.
    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut days = Vec::new();
        for (k, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let s = line.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            let d = NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .map_err(|e| crate::Error::Data(format!("calendar line {}: {s:?}: {e}", k + 1)))?;
            days.push(d);
        }
        if days.is_empty() {
            return data("calendar file lists no trading days");
        }
        Ok(TradingCalendar::new(days))
    }

    pub fn days(&self) -> &[NaiveDate] {
        &self.days
    }

    pub fn contains(&self, d: NaiveDate) -> bool {
        self.days.binary_search(&d).is_ok()
    }

    /// Open-market days in `(from, to]`, or `None` when the calendar does
    /// not cover the interval.
    pub fn trading_days_between(&self, from: NaiveDate, to: NaiveDate) -> Option<usize> {
        let (first, last) = (*self.days.first()?, *self.days.last()?);
        if from < first || to > last {
            return None;
        }
        if to <= from {
            return Some(0);
        }
        let lo = self.days.partition_point(|d| *d <= from);
        let hi = self.days.partition_point(|d| *d <= to);
        Some(hi - lo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    #[test]
    fn weekday_counting() {
        let cal = TradingCalendar::weekdays(d(2011, 1, 3), d(2011, 12, 30));
        // Wednesday to the following Friday: Thu, Fri, Mon..Fri.
        assert_eq!(cal.trading_days_between(d(2011, 1, 5), d(2011, 1, 14)), Some(7));
        assert_eq!(cal.trading_days_between(d(2011, 1, 5), d(2011, 1, 5)), Some(0));
        assert_eq!(cal.trading_days_between(d(2010, 12, 1), d(2011, 1, 14)), None);
        assert!(!cal.contains(d(2011, 1, 8)));
    }

    #[test]
    fn file_format() {
        let cal = TradingCalendar::read("# holidays removed\n2011-01-04\n\n2011-01-03\n2011-01-05\n".as_bytes()).unwrap();
        assert_eq!(cal.days().len(), 3);
        assert_eq!(cal.days()[0], d(2011, 1, 3));
        assert!(TradingCalendar::read("2011-13-01\n".as_bytes()).is_err());
        assert!(TradingCalendar::read("".as_bytes()).is_err());
    }
}
