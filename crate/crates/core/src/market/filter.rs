use std::collections::BTreeMap;
use std::io::Write;

use chrono::{Datelike, NaiveDate, Weekday};

use super::calendar::TradingCalendar;
use super::parity::{dividend_adjusted_index, ParityAdjustment};
use super::quotes::{OptionKind, OptionQuote};
use super::rates::RateCurve;
use crate::error::Result;

/// Why a quote was dropped. Checks run in declaration order and the first
/// failing one is recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RejectReason {
    NotWednesday,
    Expired,
    LastWeek,
    BeyondOneYear,
    BelowTickThreshold,
    /// No calendar coverage or rate curve for the quote.
    MissingMarketData,
    ArbitrageViolation,
}

impl RejectReason {
    pub fn code(self) -> &'static str {
        match self {
            RejectReason::NotWednesday => "not_wednesday",
            RejectReason::Expired => "expired",
            RejectReason::LastWeek => "last_week",
            RejectReason::BeyondOneYear => "beyond_one_year",
            RejectReason::BelowTickThreshold => "below_tick_threshold",
            RejectReason::MissingMarketData => "missing_market_data",
            RejectReason::ArbitrageViolation => "arbitrage_violation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    /// Minimum price kept.
    pub tick_threshold: f64,
    /// Quotes this many calendar days or fewer before expiry are dropped.
    pub last_week_days: i64,
    /// Quotes more than this many calendar days before expiry are dropped.
    pub max_calendar_days: i64,
    pub wednesday_only: bool,
    pub trading_days_per_year: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            tick_threshold: 0.125,
            last_week_days: 7,
            max_calendar_days: 365,
            wednesday_only: true,
            trading_days_per_year: 252.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rejection {
    pub quote: OptionQuote,
    pub reason: RejectReason,
}

/// Market inputs shared by the quotes of one quote date and expiry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSlice {
    pub quote_date: NaiveDate,
    pub expiry: NaiveDate,
    /// Open-market days to expiry.
    pub trading_days: usize,
    /// Annualized rate for the slice's tenor.
    pub rate: f64,
    pub tau_years: f64,
    pub parity: ParityAdjustment,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FilterOutcome {
    pub kept: Vec<OptionQuote>,
    pub rejections: Vec<Rejection>,
    pub slices: Vec<ChainSlice>,
}

impl FilterOutcome {
    pub fn slice(&self, quote_date: NaiveDate, expiry: NaiveDate) -> Option<&ChainSlice> {
        self.slices.iter().find(|s| s.quote_date == quote_date && s.expiry == expiry)
    }

    pub fn write_rejections<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "quote_date,expiry,strike,cp_flag,price,underlying_close,reason")?;
        for r in &self.rejections {
            let q = &r.quote;
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                q.quote_date.format("%Y-%m-%d"),
                q.expiry.format("%Y-%m-%d"),
                q.strike,
                q.kind.flag(),
                q.price,
                q.underlying,
                r.reason.code()
            )?;
        }
        Ok(())
    }
}

fn static_reason(q: &OptionQuote, cfg: &FilterConfig) -> Option<RejectReason> {
    let days = q.calendar_days();
    if cfg.wednesday_only && q.quote_date.weekday() != Weekday::Wed {
        Some(RejectReason::NotWednesday)
    } else if days <= 0 {
        Some(RejectReason::Expired)
    } else if days <= cfg.last_week_days {
        Some(RejectReason::LastWeek)
    } else if days > cfg.max_calendar_days {
        Some(RejectReason::BeyondOneYear)
    } else if !(q.price >= cfg.tick_threshold) {
        Some(RejectReason::BelowTickThreshold)
    } else {
        None
    }
}

/// Apply the quote filters. Never fails: every dropped quote is logged with
/// one reason and `kept.len() + rejections.len() == quotes.len()`.
///
/// The arbitrage check bounds calls below by `max(0, S_adj - K e^{-r tau})`
/// with `S_adj` from put-call parity on the surviving quotes of the same
/// slice. The pair defining `S_adj` always satisfies the bound, so filtering
/// an already filtered chain changes nothing.
pub fn filter_chain(quotes: &[OptionQuote], calendar: &TradingCalendar, rates: &RateCurve, cfg: &FilterConfig) -> FilterOutcome {
    let mut reasons: Vec<Option<RejectReason>> = quotes.iter().map(|q| static_reason(q, cfg)).collect();
    let mut groups: BTreeMap<(NaiveDate, NaiveDate), Vec<usize>> = BTreeMap::new();
    for (k, q) in quotes.iter().enumerate() {
        if reasons[k].is_none() {
            groups.entry((q.quote_date, q.expiry)).or_default().push(k);
        }
    }
    let mut slices = Vec::new();
    for ((quote_date, expiry), members) in groups {
        let inputs = calendar
            .trading_days_between(quote_date, expiry)
            .filter(|d| *d > 0)
            .and_then(|d| rates.select_rate(quote_date, d).ok().map(|r| (d, r)));
        let Some((trading_days, rate)) = inputs else {
            members.iter().for_each(|&k| reasons[k] = Some(RejectReason::MissingMarketData));
            continue;
        };
        let tau_years = trading_days as f64 / cfg.trading_days_per_year;
        let slice_quotes: Vec<OptionQuote> = members.iter().map(|&k| quotes[k]).collect();
        let parity = dividend_adjusted_index(&slice_quotes, slice_quotes[0].underlying, rate, tau_years);
        let disc = (-rate * tau_years).exp();
        for &k in &members {
            let q = &quotes[k];
            if q.kind == OptionKind::Call && q.price < (parity.s_adj - q.strike * disc).max(0.0) {
                reasons[k] = Some(RejectReason::ArbitrageViolation);
            }
        }
        slices.push(ChainSlice { quote_date, expiry, trading_days, rate, tau_years, parity });
    }
    let mut out = FilterOutcome { slices, ..Default::default() };
    for (q, reason) in quotes.iter().zip(reasons) {
        match reason {
            None => out.kept.push(*q),
            Some(reason) => out.rejections.push(Rejection { quote: *q, reason }),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn env() -> (TradingCalendar, RateCurve) {
        let cal = TradingCalendar::weekdays(d(2010, 12, 1), d(2012, 12, 31));
        let mut rates = RateCurve::new();
        rates.insert(d(2011, 1, 3), [0.01, 0.012, 0.015, 0.02], false).unwrap();
        (cal, rates)
    }

    fn quote(days: u64, strike: f64, kind: OptionKind, price: f64) -> OptionQuote {
        let wed = d(2011, 1, 5);
        OptionQuote { quote_date: wed, expiry: wed + chrono::Days::new(days), strike, kind, price, underlying: 100.0 }
    }

    #[test]
    fn reasons_and_boundaries() {
        let (cal, rates) = env();
        let mut thursday = quote(30, 100.0, OptionKind::Call, 3.0);
        thursday.quote_date = d(2011, 1, 6);
        let quotes = vec![
            thursday,
            quote(0, 100.0, OptionKind::Call, 3.0),
            quote(3, 100.0, OptionKind::Call, 3.0),
            quote(7, 100.0, OptionKind::Call, 3.0),
            quote(8, 100.0, OptionKind::Call, 3.0),
            quote(365, 100.0, OptionKind::Call, 9.0),
            quote(366, 100.0, OptionKind::Call, 9.0),
            quote(30, 150.0, OptionKind::Call, 0.10),
            quote(30, 140.0, OptionKind::Call, 0.125),
            quote(30, 80.0, OptionKind::Call, 15.0),
        ];
        let out = filter_chain(&quotes, &cal, &rates, &FilterConfig::default());
        let codes: Vec<&str> = out.rejections.iter().map(|r| r.reason.code()).collect();
        assert_eq!(
            codes,
            ["not_wednesday", "expired", "last_week", "last_week", "beyond_one_year", "below_tick_threshold", "arbitrage_violation"]
        );
        assert_eq!(out.kept.len() + out.rejections.len(), quotes.len());
        assert_eq!(out.kept.len(), 3);
        assert!(out.kept.iter().any(|q| q.price == 0.125));
    }

    #[test]
    fn empty_input() {
        let (cal, rates) = env();
        let out = filter_chain(&[], &cal, &rates, &FilterConfig::default());
        assert!(out.kept.is_empty() && out.rejections.is_empty());
    }

    #[test]
    fn missing_rates_are_logged() {
        let cal = TradingCalendar::weekdays(d(2010, 12, 1), d(2012, 12, 31));
        let out = filter_chain(&[quote(30, 100.0, OptionKind::Call, 3.0)], &cal, &RateCurve::new(), &FilterConfig::default());
        assert_eq!(out.rejections[0].reason, RejectReason::MissingMarketData);
    }

    #[test]
    fn arbitrage_uses_parity_index() {
        let (cal, rates) = env();
        // Parity at K=100 implies S_adj = 98 (dividends), so a K=90 call at
        // 8.5 is fine although it would violate the bound with S = 100.
        let slice = quote(30, 100.0, OptionKind::Call, 3.0);
        let days = cal.trading_days_between(slice.quote_date, slice.expiry).unwrap();
        let tau = days as f64 / 252.0;
        let r = rates.select_rate(slice.quote_date, days).unwrap();
        let put = 3.0 + 100.0 * (-r * tau).exp() - 98.0;
        let quotes = vec![slice, quote(30, 100.0, OptionKind::Put, put), quote(30, 90.0, OptionKind::Call, 8.5)];
        let out = filter_chain(&quotes, &cal, &rates, &FilterConfig::default());
        assert!(out.rejections.is_empty());
        let s = out.slice(slice.quote_date, slice.expiry).unwrap();
        assert!((s.parity.s_adj - 98.0).abs() < 1e-12);
    }
}
