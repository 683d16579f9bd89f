use std::collections::BTreeMap;
use std::io::Read;

use chrono::NaiveDate;

use crate::error::{data, Result};

/// Interbank tenors of the rate curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tenor {
    M1,
    M3,
    M6,
    M12,
}

impl Tenor {
    fn index(self) -> usize {
        self as usize
    }
}

/// Tenor for a contract with `days` open-market days to expiry:
/// `[1, 40]` one month, `[41, 82]` three, `[83, 183]` six, and twelve beyond.
pub fn tenor_for_days(days: usize) -> Tenor {
    match days {
        0..=40 => Tenor::M1,
        41..=82 => Tenor::M3,
        83..=183 => Tenor::M6,
        _ => Tenor::M12,
    }
}

/// Annualized rates (decimal, e.g. `0.012`) per date and tenor.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RateCurve {
    by_date: BTreeMap<NaiveDate, [f64; 4]>,
}

impl RateCurve {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, date: NaiveDate, rates: [f64; 4], allow_negative: bool) -> Result<()> {
        if rates.iter().any(|r| !r.is_finite()) {
            return data(format!("non-finite rate on {date}"));
        }
        if !allow_negative && rates.iter().any(|r| *r < 0.0) {
            return data(format!("negative rate on {date}"));
        }
        self.by_date.insert(date, rates);
        Ok(())
    }

    /// Parse the `date,r1m,r3m,r6m,r12m` CSV. Every tenor must be present.
    pub fn read<R: Read>(reader: R, allow_negative: bool) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let want = ["date", "r1m", "r3m", "r6m", "r12m"];
        if headers.len() < want.len() || want.iter().zip(headers.iter()).any(|(a, b)| *a != b) {
            return data("rate header must be `date,r1m,r3m,r6m,r12m`");
        }
        let mut curve = RateCurve::new();
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = k + 1;
            let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
                .map_err(|e| crate::Error::Data(format!("row {row}: bad date {:?}: {e}", &rec[0])))?;
            let mut rates = [0.0; 4];
            for (j, r) in rates.iter_mut().enumerate() {
                let field = rec.get(j + 1).unwrap_or("");
                if field.is_empty() {
                    return data(format!("row {row}: missing {} tenor", want[j + 1]));
                }
                *r = field.parse().map_err(|e| crate::Error::Data(format!("row {row}: bad rate {field:?}: {e}")))?;
            }
            curve.insert(date, rates, allow_negative)?;
        }
        Ok(curve)
    }

    pub fn is_empty(&self) -> bool {
        self.by_date.is_empty()
    }

    /// Rate for a quote on `date` expiring in `days` open-market days, from
    /// the latest curve on or before `date`.
    pub fn select_rate(&self, date: NaiveDate, days: usize) -> Result<f64> {
        let (_, rates) = self
            .by_date
            .range(..=date)
            .next_back()
            .ok_or_else(|| crate::Error::Data(format!("no rate curve on or before {date}")))?;
        Ok(rates[tenor_for_days(days).index()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tenor_boundaries() {
        assert_eq!(tenor_for_days(1), Tenor::M1);
        assert_eq!(tenor_for_days(40), Tenor::M1);
        assert_eq!(tenor_for_days(41), Tenor::M3);
        assert_eq!(tenor_for_days(82), Tenor::M3);
        assert_eq!(tenor_for_days(83), Tenor::M6);
        assert_eq!(tenor_for_days(183), Tenor::M6);
        assert_eq!(tenor_for_days(184), Tenor::M12);
        assert_eq!(tenor_for_days(200), Tenor::M12);
    }

    #[test]
    fn curve_lookup() {
        let text = "date,r1m,r3m,r6m,r12m\n2011-01-03,0.0026,0.0030,0.0046,0.0078\n2011-01-05,0.0027,0.0031,0.0047,0.0079\n";
        let curve = RateCurve::read(text.as_bytes(), false).unwrap();
        let d = |k| NaiveDate::from_ymd_opt(2011, 1, k).unwrap();
        assert_eq!(curve.select_rate(d(5), 40).unwrap(), 0.0027);
        assert_eq!(curve.select_rate(d(4), 82).unwrap(), 0.0030);
        assert_eq!(curve.select_rate(d(5), 200).unwrap(), 0.0079);
        assert!(curve.select_rate(d(2), 10).is_err());
    }

    #[test]
    fn missing_or_negative_tenors() {
        let missing = "date,r1m,r3m,r6m,r12m\n2011-01-03,0.0026,,0.0046,0.0078\n";
        assert!(RateCurve::read(missing.as_bytes(), false).is_err());
        let negative = "date,r1m,r3m,r6m,r12m\n2011-01-03,-0.001,0.0030,0.0046,0.0078\n";
        assert!(RateCurve::read(negative.as_bytes(), false).is_err());
        assert!(RateCurve::read(negative.as_bytes(), true).is_ok());
    }
}
