//! Flat `key = value` configuration files.
//!
//! Keys mirror the field names of [`ModelParams`], [`InferenceConfig`] and
//! [`PricingConfig`]. Calibration output uses the same format, so a file
//! written by the calibrator can be fed straight to the pricer; its
//! diagnostic keys live under the `calibration.` and `moment.` prefixes and
//! are ignored by the readers below.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::calibration::{CalibrationResult, ScaleFit};
use crate::error::{data, Result};
use crate::inference::{InferenceConfig, TailMode};
use crate::mixture::VolatilityPrior;
use crate::model::ModelParams;
use crate::pricing::PricingConfig;

pub const PARAM_KEYS: [&str; 8] = ["d", "nu", "alpha", "beta", "m", "mu", "r", "sigma_bs"];
pub const PRICING_KEYS: [&str; 10] = [
    "tau",
    "n_mc",
    "i_max",
    "tail",
    "max_future_restarts",
    "n_real",
    "prior",
    "lambda_nodes",
    "sigma_rule_step",
    "sigma_nodes",
];
const DIAGNOSTIC_PREFIXES: [&str; 2] = ["calibration.", "moment."];

/// Ordered key-value map with typed accessors.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn new() -> Self {
        KeyValues::default()
    }

    /// Parse `key = value` lines. Blank lines and lines starting with `#`
    /// are skipped; a repeated key is an error.
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = KeyValues::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return data(format!("line {}: expected `key = value`, got {line:?}", n + 1));
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return data(format!("line {}: empty key", n + 1));
            }
            if kv.entries.insert(k.to_string(), v.to_string()).is_some() {
                return data(format!("line {}: duplicate key {k}", n + 1));
            }
        }
        Ok(kv)
    }

    pub fn read<R: Read>(mut reader: R) -> Result<Self> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        KeyValues::parse(&text)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for (k, v) in &self.entries {
            writeln!(w, "{k} = {v}")?;
        }
        Ok(())
    }

    /// Canonical text form, one sorted `key = value` per line.
    pub fn to_canonical_string(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8 keys and values")
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Entries of `other` replace those of `self`.
    pub fn merge(&mut self, other: &KeyValues) {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| crate::Error::Data(format!("key {key}: cannot parse {v:?}: {e}"))),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: Display,
    {
        self.get(key)?.ok_or_else(|| crate::Error::Data(format!("missing key {key}")))
    }

    /// Fail on any key that is neither in `known` nor a diagnostic key.
    pub fn check_keys(&self, known: &[&str]) -> Result<()> {
        for k in self.entries.keys() {
            let diag = DIAGNOSTIC_PREFIXES.iter().any(|p| k.starts_with(p));
            if !diag && !known.contains(&k.as_str()) {
                return data(format!("unknown configuration key {k}"));
            }
        }
        Ok(())
    }
}

/// Model parameters; `m` defaults to 21 and `mu`, `r` to zero.
pub fn params_from_kv(kv: &KeyValues) -> Result<ModelParams<f64>> {
    ModelParams::new(
        kv.require("d")?,
        kv.require("nu")?,
        kv.require("alpha")?,
        kv.require("beta")?,
        kv.get("m")?.unwrap_or(21),
        kv.get("mu")?.unwrap_or(0.0),
        kv.get("r")?.unwrap_or(0.0),
    )
}

pub fn params_to_kv(p: &ModelParams<f64>, kv: &mut KeyValues) {
    kv.set("d", p.d);
    kv.set("nu", p.nu);
    kv.set("alpha", p.alpha);
    kv.set("beta", p.beta);
    kv.set("m", p.m);
    kv.set("mu", p.mu);
    kv.set("r", p.r);
}

fn parse_tail(v: &str) -> Result<TailMode> {
    match v {
        "truncate" => Ok(TailMode::Truncate),
        "euler_maclaurin" => Ok(TailMode::EulerMaclaurin),
        _ => data(format!("tail must be truncate or euler_maclaurin, got {v:?}")),
    }
}

fn tail_name(t: TailMode) -> &'static str {
    match t {
        TailMode::Truncate => "truncate",
        TailMode::EulerMaclaurin => "euler_maclaurin",
    }
}

/// `inverse_gamma` or `point_mass:<sigma>`.
fn parse_prior(v: &str) -> Result<VolatilityPrior> {
    if v == "inverse_gamma" {
        return Ok(VolatilityPrior::InverseGamma);
    }
    if let Some(s) = v.strip_prefix("point_mass:") {
        let sigma: f64 = s
            .trim()
            .parse()
            .map_err(|e| crate::Error::Data(format!("prior: bad sigma {s:?}: {e}")))?;
        return Ok(VolatilityPrior::PointMass(sigma));
    }
    data(format!("prior must be inverse_gamma or point_mass:<sigma>, got {v:?}"))
}

fn prior_name(p: VolatilityPrior) -> String {
    match p {
        VolatilityPrior::InverseGamma => "inverse_gamma".to_string(),
        VolatilityPrior::PointMass(s) => format!("point_mass:{s}"),
    }
}

/// Pricing and inference settings; absent keys keep their defaults.
pub fn pricing_from_kv(kv: &KeyValues) -> Result<PricingConfig> {
    let mut cfg = PricingConfig::default();
    let inf: &mut InferenceConfig = &mut cfg.inference;
    if let Some(v) = kv.get("tau")? {
        inf.tau = v;
    }
    if let Some(v) = kv.get("n_mc")? {
        inf.n_mc = v;
    }
    match kv.raw("i_max") {
        None | Some("auto") => {}
        Some(_) => inf.i_max = Some(kv.require("i_max")?),
    }
    if let Some(v) = kv.raw("tail") {
        inf.tail = parse_tail(v)?;
    }
    if let Some(v) = kv.get("max_future_restarts")? {
        inf.max_future_restarts = v;
    }
    if let Some(v) = kv.get("n_real")? {
        cfg.n_real = v;
    }
    if let Some(v) = kv.raw("prior") {
        cfg.prior = parse_prior(v)?;
    }
    if let Some(v) = kv.get("lambda_nodes")? {
        cfg.lambda_nodes = v;
    }
    if let Some(v) = kv.get("sigma_rule_step")? {
        cfg.sigma_rule_step = v;
    }
    if let Some(v) = kv.get("sigma_nodes")? {
        cfg.sigma_nodes = v;
    }
    Ok(cfg)
}

pub fn pricing_to_kv(cfg: &PricingConfig, kv: &mut KeyValues) {
    let inf = &cfg.inference;
    kv.set("tau", inf.tau);
    kv.set("n_mc", inf.n_mc);
    match inf.i_max {
        Some(v) => kv.set("i_max", v),
        None => kv.set("i_max", "auto"),
    }
    kv.set("tail", tail_name(inf.tail));
    kv.set("max_future_restarts", inf.max_future_restarts);
    kv.set("n_real", cfg.n_real);
    kv.set("prior", prior_name(cfg.prior));
    kv.set("lambda_nodes", cfg.lambda_nodes);
    kv.set("sigma_rule_step", cfg.sigma_rule_step);
    kv.set("sigma_nodes", cfg.sigma_nodes);
}

/// Calibration output: fitted parameters (with the scale fit when given)
/// plus objective, window and per-moment diagnostics.
pub fn calibration_to_kv(res: &CalibrationResult, scale: Option<&ScaleFit>) -> KeyValues {
    let mut kv = KeyValues::new();
    let mut params = res.params;
    if let Some(s) = scale {
        params = params.with_beta(s.beta).with_mu(s.mu);
        kv.set("sigma_bs", s.sigma_bs);
    }
    params_to_kv(&params, &mut kv);
    kv.set("calibration.objective", res.objective);
    kv.set("calibration.seed", res.seed);
    kv.set("calibration.window_len", res.window.len);
    if let Some(d) = res.window.start {
        kv.set("calibration.window_start", d.format("%Y-%m-%d"));
    }
    if let Some(d) = res.window.end {
        kv.set("calibration.window_end", d.format("%Y-%m-%d"));
    }
    for (k, name) in ["d", "nu", "alpha"].iter().enumerate() {
        kv.set(&format!("calibration.refined_{name}"), res.refined[k]);
        kv.set(&format!("calibration.flat_{name}"), res.flat_axes[k]);
    }
    kv.set("calibration.identifiable", res.identifiable());
    kv.set("calibration.cells", res.cells.len());
    if let Some(s) = scale {
        kv.set("calibration.m2_data", s.m2_data);
        kv.set("calibration.m2_model_unit", s.m2_model_unit);
    }
    for m in &res.diagnostics {
        kv.set(&format!("moment.{}", m.label), format!("{} {} {}", m.data, m.model, m.weight));
    }
    kv
}
