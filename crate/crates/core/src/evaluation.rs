//! Out-of-sample evaluation of filtered call quotes against the model and
//! the Black–Scholes benchmark.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::NaiveDate;

use crate::error::{data, domain, Result};
use crate::market::{EvaluationRecord, FilterOutcome, OptionKind, OptionQuote};
use crate::model::{ModelParams, ReturnSeries};
use crate::pricing::{bs_implied_vol, bs_price, per_step_rate, ContractSpec, PreparedPricer, PricingConfig};
use crate::rng::{derive_seed, STREAM_POSTERIOR};

/// Per-step volatility of the Black–Scholes benchmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BsVolatility {
    Fixed(f64),
    /// Sample standard deviation of this many returns up to the quote date.
    Rolling(usize),
}

impl BsVolatility {
    /// Volatility for a pricing step `t0`, given the known `history`.
    pub fn at(&self, history: &[f64]) -> Result<f64> {
        match *self {
            BsVolatility::Fixed(s) => Ok(s),
            BsVolatility::Rolling(len) => {
                if len < 2 || history.len() < len {
                    return data(format!("rolling volatility needs {len} returns, {} available", history.len()));
                }
                let w = &history[history.len() - len..];
                let mean = w.iter().sum::<f64>() / len as f64;
                let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (len - 1) as f64;
                if !(var > 0.0) {
                    return domain("rolling volatility window has zero variance");
                }
                Ok(var.sqrt())
            }
        }
    }
}

/// Calibrated inputs of both pricers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketModel {
    pub params: ModelParams<f64>,
    pub bs_vol: BsVolatility,
    pub trading_days_per_year: f64,
}

impl MarketModel {
    pub fn new(params: ModelParams<f64>, bs_vol: BsVolatility) -> Result<Self> {
        params.validate()?;
        match bs_vol {
            BsVolatility::Fixed(s) if !(s > 0.0) => return domain(format!("sigma_bs must be positive, got {s}")),
            BsVolatility::Rolling(n) if n < 2 => return domain("rolling window needs at least two returns"),
            _ => {}
        }
        Ok(MarketModel { params, bs_vol, trading_days_per_year: 252.0 })
    }
}

/// Position of the pricing step for quotes taken at the close of `date`:
/// returns up to and including `date` are known, so `t0` is one past it.
pub fn pricing_step(returns: &ReturnSeries, date: NaiveDate) -> Result<usize> {
    match returns.dates().binary_search(&date) {
        Ok(j) => Ok(j + 2),
        Err(_) => data(format!("quote date {date} has no return in the series")),
    }
}

/// Price every kept call of `outcome`. One pricer is prepared per quote
/// date and reused across strikes and expiries.
pub fn evaluate_calls(
    outcome: &FilterOutcome,
    returns: &ReturnSeries,
    model: &MarketModel,
    cfg: &PricingConfig,
    seed: u64,
) -> Result<Vec<EvaluationRecord>> {
    let mut by_date: BTreeMap<NaiveDate, Vec<&OptionQuote>> = BTreeMap::new();
    for q in outcome.kept.iter().filter(|q| q.kind == OptionKind::Call) {
        by_date.entry(q.quote_date).or_default().push(q);
    }
    let per_year = model.trading_days_per_year;
    let mut records = Vec::new();
    for (date, quotes) in by_date {
        let t0 = pricing_step(returns, date)?;
        let max_steps = quotes
            .iter()
            .filter_map(|q| outcome.slice(q.quote_date, q.expiry))
            .map(|s| s.trading_days)
            .max()
            .unwrap_or(1);
        let history = &returns.returns()[..t0 - 1];
        let sigma_bs = model.bs_vol.at(history)?;
        let pricer = PreparedPricer::new(
            history,
            t0,
            &model.params,
            cfg,
            max_steps,
            derive_seed(seed, STREAM_POSTERIOR, t0 as u64),
        )?;
        for q in quotes {
            let slice = outcome
                .slice(q.quote_date, q.expiry)
                .ok_or_else(|| crate::Error::Data(format!("no market slice for {} {}", q.quote_date, q.expiry)))?;
            let n = slice.trading_days;
            let r = per_step_rate(slice.rate, per_year);
            let s_adj = slice.parity.s_adj;
            let maturity = t0 + n - 1;
            let model_price = pricer.price_at_rate(q.strike, maturity, s_adj, r, cfg.inference.max_future_restarts)?.price;
            let contract = ContractSpec::new(q.strike, t0, maturity, s_adj)?;
            let bs = bs_price(&contract, sigma_bs, r)?;
            let annualize = |v: f64| v * per_year.sqrt();
            records.push(EvaluationRecord {
                quote: *q,
                trading_days: n,
                s_adj,
                rate_per_step: r,
                model_price,
                bs_price: bs,
                market_iv: bs_implied_vol(&contract, q.price, r).ok().map(annualize),
                model_iv: bs_implied_vol(&contract, model_price, r).ok().map(annualize),
            });
        }
    }
    Ok(records)
}

/// Implied volatilities across strikes for one quote date and expiry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmilePoint {
    pub strike: f64,
    pub implied_vol_model: Option<f64>,
    pub implied_vol_market: Option<f64>,
}

pub fn smile(records: &[EvaluationRecord], quote_date: NaiveDate, expiry: NaiveDate) -> Vec<SmilePoint> {
    let mut pts: Vec<SmilePoint> = records
        .iter()
        .filter(|r| r.quote.quote_date == quote_date && r.quote.expiry == expiry)
        .map(|r| SmilePoint { strike: r.quote.strike, implied_vol_model: r.model_iv, implied_vol_market: r.market_iv })
        .collect();
    pts.sort_by(|a, b| a.strike.total_cmp(&b.strike));
    pts
}

pub fn write_smile<W: Write>(points: &[SmilePoint], mut w: W) -> Result<()> {
    writeln!(w, "strike,implied_vol_model,implied_vol_market")?;
    let fmt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for p in points {
        writeln!(w, "{},{},{}", p.strike, fmt(p.implied_vol_model), fmt(p.implied_vol_market))?;
    }
    Ok(())
}

pub fn write_records<W: Write>(records: &[EvaluationRecord], mut w: W) -> Result<()> {
    writeln!(w, "quote_date,expiry,strike,trading_days,s_adj,market_price,model_price,bs_price,market_iv,model_iv")?;
    let fmt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.quote.quote_date.format("%Y-%m-%d"),
            r.quote.expiry.format("%Y-%m-%d"),
            r.quote.strike,
            r.trading_days,
            r.s_adj,
            r.quote.price,
            r.model_price,
            r.bs_price,
            fmt(r.market_iv),
            fmt(r.model_iv)
        )?;
    }
    Ok(())
}
