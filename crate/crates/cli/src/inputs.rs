//! Reading configuration and input tables.

use std::fs::File;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::Args;
use swarch::config::{params_from_kv, pricing_from_kv, KeyValues, PARAM_KEYS, PRICING_KEYS};
use swarch::market::{RateCurve, TradingCalendar};
use swarch::{Params, PricingConfig, ReturnSeries};

use crate::artifact::{require_file, Manifest};
use crate::error::{usage, CliError, CliResult};

/// Model defaults used when neither a config file nor `--set` names a key.
const MODEL_DEFAULTS: &str = "d = 0.224\nnu = 0.0002\nalpha = 5.5\nbeta = 0.3\nm = 21\nmu = 0\nr = 0\n";

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Key-value configuration file (model parameters and pricing settings).
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

/// Effective settings: defaults, then the file, then `--set` overrides.
pub struct Settings {
    pub kv: KeyValues,
    pub params: Params,
    pub pricing: PricingConfig,
    pub sigma_bs: Option<f64>,
}

impl ConfigArgs {
    pub fn check_paths(&self) -> CliResult<()> {
        if let Some(p) = &self.config {
            require_file(p, "config")?;
        }
        Ok(())
    }

    pub fn load(&self, manifest: &mut Manifest) -> CliResult<Settings> {
        let mut kv = KeyValues::parse(MODEL_DEFAULTS)?;
        if let Some(p) = &self.config {
            kv.merge(&KeyValues::read(File::open(p)?)?);
        }
        for s in &self.set {
            let Some((k, v)) = s.split_once('=') else {
                return usage(format!("--set expects KEY=VALUE, got {s:?}"));
            };
            kv.set(k.trim(), v.trim());
        }
        let known: Vec<&str> = PARAM_KEYS.iter().chain(PRICING_KEYS.iter()).copied().collect();
        kv.check_keys(&known).map_err(|e| CliError::Usage(e.to_string()))?;
        let params = params_from_kv(&kv)?;
        let pricing = pricing_from_kv(&kv)?;
        pricing.inference.validate(&params)?;
        let sigma_bs = kv.get("sigma_bs")?;
        let mut effective = KeyValues::new();
        for k in known {
            if let Some(v) = kv.raw(k) {
                effective.set(k, v);
            }
        }
        manifest.extend("config.", &effective);
        Ok(Settings { kv: effective, params, pricing, sigma_bs })
    }
}

pub fn read_returns(path: &Path, manifest: &mut Manifest) -> CliResult<ReturnSeries> {
    manifest.input("returns", path)?;
    Ok(ReturnSeries::read_csv(File::open(path)?)?)
}

pub fn read_calendar(path: Option<&Path>, from: NaiveDate, to: NaiveDate, manifest: &mut Manifest) -> CliResult<TradingCalendar> {
    match path {
        Some(p) => {
            manifest.input("calendar", p)?;
            Ok(TradingCalendar::read(File::open(p)?)?)
        }
        None => Ok(TradingCalendar::weekdays(from, to)),
    }
}

pub fn read_rates(path: &Path, allow_negative: bool, manifest: &mut Manifest) -> CliResult<RateCurve> {
    manifest.input("rates", path)?;
    Ok(RateCurve::read(File::open(path)?, allow_negative)?)
}

pub fn parse_date(s: &str) -> Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| format!("expected YYYY-MM-DD: {e}"))
}

/// Row of the contract table `quote_date,expiry,strike,S_prev[,price]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractRow {
    pub quote_date: NaiveDate,
    pub expiry: NaiveDate,
    pub strike: f64,
    pub s_prev: f64,
    pub price: Option<f64>,
}

pub fn read_contracts(path: &Path, manifest: &mut Manifest) -> CliResult<Vec<ContractRow>> {
    manifest.input("contracts", path)?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(File::open(path)?);
    let headers = rdr.headers().map_err(swarch::Error::from)?.clone();
    let want = ["quote_date", "expiry", "strike", "S_prev"];
    if headers.len() < 4 || want.iter().zip(headers.iter()).any(|(a, b)| *a != b) {
        return Err(swarch::Error::Data("contract header must be `quote_date,expiry,strike,S_prev[,price]`".into()).into());
    }
    let with_price = headers.get(4) == Some("price");
    let bad = |row: usize, what: &str, v: &str| swarch::Error::Data(format!("contract row {row}: bad {what} {v:?}"));
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(swarch::Error::from)?;
        let date = |k: usize, what: &str| parse_date(&rec[k]).map_err(|_| bad(row, what, &rec[k]));
        let num = |k: usize, what: &str| rec[k].parse::<f64>().map_err(|_| bad(row, what, &rec[k]));
        let price = match (with_price, rec.get(4)) {
            (true, Some(v)) if !v.is_empty() => Some(num(4, "price")?),
            _ => None,
        };
        let c = ContractRow {
            quote_date: date(0, "quote_date")?,
            expiry: date(1, "expiry")?,
            strike: num(2, "strike")?,
            s_prev: num(3, "S_prev")?,
            price,
        };
        if c.expiry <= c.quote_date {
            return Err(swarch::Error::Data(format!("contract row {row}: expiry not after quote date")).into());
        }
        out.push(c);
    }
    Ok(out)
}
