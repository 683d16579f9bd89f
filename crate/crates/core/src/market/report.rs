use std::collections::BTreeMap;
use std::io::Write;

use super::quotes::OptionQuote;
use crate::error::Result;

/// Interior moneyness edges; buckets are left-closed, right-open, with an
/// open bucket below the first edge and a closed-above one from the last.
pub const MONEYNESS_EDGES: [f64; 9] = [0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5];
/// Interior days-to-maturity edges (open-market days), same convention.
pub const DTM_EDGES: [usize; 3] = [21, 63, 126];

pub fn moneyness_bucket(m: f64) -> usize {
    MONEYNESS_EDGES.partition_point(|e| *e <= m)
}

pub fn moneyness_label(k: usize) -> String {
    match k {
        0 => format!("<{:.2}", MONEYNESS_EDGES[0]),
        k if k == MONEYNESS_EDGES.len() => format!(">={:.2}", MONEYNESS_EDGES[k - 1]),
        k => format!("{:.2}-{:.2}", MONEYNESS_EDGES[k - 1], MONEYNESS_EDGES[k]),
    }
}

pub fn dtm_bucket(days: usize) -> usize {
    DTM_EDGES.partition_point(|e| *e <= days)
}

pub fn dtm_label(k: usize) -> String {
    match k {
        0 => format!("<{}", DTM_EDGES[0]),
        k if k == DTM_EDGES.len() => format!(">={}", DTM_EDGES[k - 1]),
        k => format!("{}-{}", DTM_EDGES[k - 1], DTM_EDGES[k]),
    }
}

/// A priced call quote.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluationRecord {
    pub quote: OptionQuote,
    /// Open-market days to expiry.
    pub trading_days: usize,
    /// Dividend-adjusted index used as the underlying.
    pub s_adj: f64,
    pub rate_per_step: f64,
    pub model_price: f64,
    pub bs_price: f64,
    /// Annualized Black–Scholes implied volatilities of the market and
    /// model prices.
    pub market_iv: Option<f64>,
    pub model_iv: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportCell {
    /// Bucket label or `All`.
    pub moneyness: String,
    pub dtm: String,
    pub count: usize,
    pub avg_price: f64,
    pub avg_implied_vol: Option<f64>,
    pub rmse_model: f64,
    pub rmse_bs: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvaluationReport {
    /// Non-empty buckets in moneyness-major order, then the `All` column of
    /// each moneyness row, the `All` row per maturity bucket, and the total.
    pub cells: Vec<ReportCell>,
}

impl EvaluationReport {
    pub fn cell(&self, moneyness: &str, dtm: &str) -> Option<&ReportCell> {
        self.cells.iter().find(|c| c.moneyness == moneyness && c.dtm == dtm)
    }

    pub fn total(&self) -> Option<&ReportCell> {
        self.cell("All", "All")
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "moneyness,dtm,count,avg_price,avg_implied_vol,rmse_model,rmse_bs")?;
        for c in &self.cells {
            let iv = c.avg_implied_vol.map_or(String::new(), |v| v.to_string());
            writeln!(w, "{},{},{},{},{},{},{}", c.moneyness, c.dtm, c.count, c.avg_price, iv, c.rmse_model, c.rmse_bs)?;
        }
        Ok(())
    }
}

fn summarize(moneyness: String, dtm: String, recs: &[&EvaluationRecord]) -> ReportCell {
    let n = recs.len() as f64;
    let ivs: Vec<f64> = recs.iter().filter_map(|r| r.market_iv).collect();
    let mse = |f: &dyn Fn(&EvaluationRecord) -> f64| recs.iter().map(|r| (f(r) - r.quote.price).powi(2)).sum::<f64>() / n;
    ReportCell {
        moneyness,
        dtm,
        count: recs.len(),
        avg_price: recs.iter().map(|r| r.quote.price).sum::<f64>() / n,
        avg_implied_vol: (!ivs.is_empty()).then(|| ivs.iter().sum::<f64>() / ivs.len() as f64),
        rmse_model: mse(&|r| r.model_price).sqrt(),
        rmse_bs: mse(&|r| r.bs_price).sqrt(),
    }
}

/// Bucket by moneyness and open-market days to maturity and compute
/// counts, average market price and implied volatility, and root mean
/// squared pricing errors of both models.
pub fn bucket_and_report(records: &[EvaluationRecord]) -> EvaluationReport {
    let mut cells = BTreeMap::<(usize, usize), Vec<&EvaluationRecord>>::new();
    for r in records {
        cells.entry((moneyness_bucket(r.quote.moneyness()), dtm_bucket(r.trading_days))).or_default().push(r);
    }
    let mut out = Vec::new();
    for ((m, d), recs) in &cells {
        out.push(summarize(moneyness_label(*m), dtm_label(*d), recs));
    }
    let mut by_m = BTreeMap::<usize, Vec<&EvaluationRecord>>::new();
    let mut by_d = BTreeMap::<usize, Vec<&EvaluationRecord>>::new();
    for r in records {
        by_m.entry(moneyness_bucket(r.quote.moneyness())).or_default().push(r);
        by_d.entry(dtm_bucket(r.trading_days)).or_default().push(r);
    }
    for (m, recs) in &by_m {
        out.push(summarize(moneyness_label(*m), "All".into(), recs));
    }
    for (d, recs) in &by_d {
        out.push(summarize("All".into(), dtm_label(*d), recs));
    }
    if !records.is_empty() {
        let all: Vec<&EvaluationRecord> = records.iter().collect();
        out.push(summarize("All".into(), "All".into(), &all));
    }
    EvaluationReport { cells: out }
}

/// Mean squared pricing errors per open-market days to maturity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaturityError {
    pub trading_days: usize,
    pub count: usize,
    pub mse_model: f64,
    pub mse_bs: f64,
}

pub fn mse_by_maturity(records: &[EvaluationRecord]) -> Vec<MaturityError> {
    let mut acc = BTreeMap::<usize, (usize, f64, f64)>::new();
    for r in records {
        let e = acc.entry(r.trading_days).or_default();
        e.0 += 1;
        e.1 += (r.model_price - r.quote.price).powi(2);
        e.2 += (r.bs_price - r.quote.price).powi(2);
    }
    acc.into_iter()
        .map(|(trading_days, (count, m, b))| MaturityError {
            trading_days,
            count,
            mse_model: m / count as f64,
            mse_bs: b / count as f64,
        })
        .collect()
}

pub fn write_maturity_errors<W: Write>(rows: &[MaturityError], mut w: W) -> Result<()> {
    writeln!(w, "trading_days,count,mse_model,mse_bs")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.trading_days, r.count, r.mse_model, r.mse_bs)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::OptionKind;
    use chrono::NaiveDate;

    fn rec(strike: f64, days: usize, price: f64, model: f64, bs: f64) -> EvaluationRecord {
        let d = NaiveDate::from_ymd_opt(2011, 1, 5).unwrap();
        EvaluationRecord {
            quote: OptionQuote { quote_date: d, expiry: d, strike, kind: OptionKind::Call, price, underlying: 100.0 },
            trading_days: days,
            s_adj: 100.0,
            rate_per_step: 0.0,
            model_price: model,
            bs_price: bs,
            market_iv: Some(0.2),
            model_iv: None,
        }
    }

    #[test]
    fn bucket_edges() {
        assert_eq!(moneyness_label(moneyness_bucket(1.0)), "1.00-1.25");
        assert_eq!(moneyness_label(moneyness_bucket(0.4999)), "<0.50");
        assert_eq!(moneyness_label(moneyness_bucket(0.5)), "0.50-0.75");
        assert_eq!(moneyness_label(moneyness_bucket(2.5)), ">=2.50");
        assert_eq!(moneyness_label(moneyness_bucket(2.4999)), "2.25-2.50");
        assert_eq!(dtm_label(dtm_bucket(20)), "<21");
        assert_eq!(dtm_label(dtm_bucket(21)), "21-63");
        assert_eq!(dtm_label(dtm_bucket(63)), "63-126");
        assert_eq!(dtm_label(dtm_bucket(252)), ">=126");
    }

    #[test]
    fn rmse_arithmetic() {
        let one = bucket_and_report(&[rec(100.0, 30, 5.0, 5.0, 4.0)]);
        assert_eq!(one.total().unwrap().rmse_model, 0.0);
        assert_eq!(one.total().unwrap().rmse_bs, 1.0);
        let two = bucket_and_report(&[rec(100.0, 30, 5.0, 8.0, 5.0), rec(100.0, 30, 5.0, 1.0, 5.0)]);
        assert!((two.total().unwrap().rmse_model - 5.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!(bucket_and_report(&[]).cells.is_empty());
    }

    #[test]
    fn marginals_match_recomputation() {
        let recs: Vec<EvaluationRecord> = (0..60)
            .map(|k| {
                let strike = 40.0 + 4.0 * k as f64;
                let price = 1.0 + (k % 7) as f64;
                rec(strike, 5 + 4 * k, price, price + 0.1 * (k % 5) as f64, price - 0.2 * (k % 3) as f64)
            })
            .collect();
        let report = bucket_and_report(&recs);
        let total = report.total().unwrap();
        assert_eq!(total.count, 60);
        let direct = (recs.iter().map(|r| (r.model_price - r.quote.price).powi(2)).sum::<f64>() / 60.0).sqrt();
        assert!((total.rmse_model - direct).abs() < 1e-12);
        let cell_count: usize = report.cells.iter().filter(|c| c.moneyness != "All" && c.dtm != "All").map(|c| c.count).sum();
        assert_eq!(cell_count, 60);
        let row_mse: f64 = report
            .cells
            .iter()
            .filter(|c| c.moneyness != "All" && c.dtm == "All")
            .map(|c| c.rmse_bs.powi(2) * c.count as f64)
            .sum::<f64>()
            / 60.0;
        assert!((row_mse.sqrt() - total.rmse_bs).abs() < 1e-12);
        let by_m = mse_by_maturity(&recs);
        assert_eq!(by_m.iter().map(|r| r.count).sum::<usize>(), 60);
    }
}
