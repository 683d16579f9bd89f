use std::io::{Read, Write};

use chrono::NaiveDate;

use crate::error::{data, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OptionKind {
    Call,
    Put,
}

impl OptionKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "c" | "call" => Ok(OptionKind::Call),
            "p" | "put" => Ok(OptionKind::Put),
            other => data(format!("unknown option flag {other:?}")),
        }
    }

    pub fn flag(self) -> &'static str {
        match self {
            OptionKind::Call => "C",
            OptionKind::Put => "P",
        }
    }
}

/// One option price observation. `price` is whatever single price the
/// source provides (close or mid); `underlying` is the index level at the
/// same time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionQuote {
    pub quote_date: NaiveDate,
    pub expiry: NaiveDate,
    pub strike: f64,
    pub kind: OptionKind,
    pub price: f64,
    pub underlying: f64,
}

impl OptionQuote {
    /// Index level over strike.
    pub fn moneyness(&self) -> f64 {
        self.underlying / self.strike
    }

    pub fn calendar_days(&self) -> i64 {
        (self.expiry - self.quote_date).num_days()
    }
}

const HEADER: [&str; 6] = ["quote_date", "expiry", "strike", "cp_flag", "price", "underlying_close"];

fn parse_date(s: &str, row: usize) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| crate::Error::Data(format!("row {row}: bad date {s:?}: {e}")))
}

fn parse_num(s: &str, row: usize, what: &str) -> Result<f64> {
    let v: f64 = s.parse().map_err(|e| crate::Error::Data(format!("row {row}: bad {what} {s:?}: {e}")))?;
    if !v.is_finite() {
        return data(format!("row {row}: non-finite {what}"));
    }
    Ok(v)
}

/// Parse the `quote_date,expiry,strike,cp_flag,price,underlying_close` CSV.
pub fn read_chain<R: Read>(reader: R) -> Result<Vec<OptionQuote>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() < HEADER.len() || HEADER.iter().zip(headers.iter()).any(|(a, b)| *a != b) {
        return data(format!("option chain header must be `{}`", HEADER.join(",")));
    }
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = k + 1;
        let q = OptionQuote {
            quote_date: parse_date(&rec[0], row)?,
            expiry: parse_date(&rec[1], row)?,
            strike: parse_num(&rec[2], row, "strike")?,
            kind: OptionKind::parse(&rec[3])?,
            price: parse_num(&rec[4], row, "price")?,
            underlying: parse_num(&rec[5], row, "underlying close")?,
        };
        if !(q.strike > 0.0 && q.underlying > 0.0) {
            return data(format!("row {row}: strike and underlying must be positive"));
        }
        out.push(q);
    }
    Ok(out)
}

pub fn write_chain<W: Write>(quotes: &[OptionQuote], mut w: W) -> Result<()> {
    writeln!(w, "{}", HEADER.join(","))?;
    for q in quotes {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            q.quote_date.format("%Y-%m-%d"),
            q.expiry.format("%Y-%m-%d"),
            q.strike,
            q.kind.flag(),
            q.price,
            q.underlying
        )?;
    }
    Ok(())
}
