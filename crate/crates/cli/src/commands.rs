use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use chrono::{Days, NaiveDate};
use swarch::calibration::{
    calibrate_scale, calibrate_shape, empirical_moments, CalibrationGrid, GridAxis, ScaleCalibrationConfig,
    ShapeCalibrationConfig, Weighting,
};
use swarch::config::calibration_to_kv;
use swarch::evaluation::{evaluate_calls, pricing_step, smile, write_records, write_smile, BsVolatility, MarketModel};
use swarch::inference::PastPosterior;
use swarch::market::{bucket_and_report, filter_chain, mse_by_maturity, read_chain, write_maturity_errors, FilterConfig, TradingCalendar};
use swarch::mixture::{build_rho_bar, default_sigma_grid};
use swarch::model::{a_coefficient, simulate_x, RestartPath};
use swarch::pricing::{bs_implied_vol, bs_price, per_step_rate, ContractSpec};
use swarch::rng::{derive_seed, STREAM_POSTERIOR};
use swarch::{PreparedPricer, ReturnSeries};

use crate::artifact::{check_output, prepare_dir, require_file, Manifest, Sink};
use crate::error::{usage, CliResult};
use crate::inputs::{read_calendar, read_contracts, read_rates, read_returns, ContractRow};
use crate::{CalibrateArgs, EvaluateArgs, ImpliedVolArgs, InferArgs, PlotArgs, PriceArgs, SimulateArgs};

const DAYS_PER_YEAR: f64 = 252.0;

fn out_check(out: Option<&Path>, inputs: &[&Path]) -> CliResult<()> {
    match out {
        Some(p) => check_output(p, inputs),
        None => Ok(()),
    }
}

fn annualize(v: f64) -> f64 {
    v * DAYS_PER_YEAR.sqrt()
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

pub fn simulate(a: &SimulateArgs) -> CliResult<()> {
    a.config.check_paths()?;
    out_check(a.out.as_deref(), &a.config.config.iter().map(|p| p.as_path()).collect::<Vec<_>>())?;
    if a.days == 0 {
        return usage("--days must be positive");
    }
    let mut manifest = Manifest::new("simulate", Some(a.seed));
    let settings = a.config.load(&mut manifest)?;
    manifest.set("days", a.days);
    manifest.set("start", a.start);
    let path = simulate_x(&settings.params, a.days, a.seed)?;
    let end = a.start + Days::new(2 * a.days as u64 + 7);
    let calendar = TradingCalendar::weekdays(a.start, end);
    let dates = &calendar.days()[..a.days];
    let mut body = Vec::new();
    writeln!(body, "date,log_return,i_state,a_coeff,y")?;
    for k in 0..a.days {
        writeln!(body, "{},{},{},{},{}", dates[k].format("%Y-%m-%d"), path.x[k], path.states[k], path.a[k], path.y[k])?;
    }
    Sink::new(&manifest).emit(a.out.as_deref(), &body)
}

fn parse_axis(s: &str, name: &str) -> CliResult<GridAxis> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums: Option<Vec<f64>> = parts.iter().map(|p| p.trim().parse().ok()).collect();
    match nums.as_deref() {
        Some([v]) => Ok(GridAxis::single(*v)),
        Some([lo, hi, step]) => Ok(GridAxis::new(*lo, *hi, *step)?),
        _ => usage(format!("--{name}-grid expects lo:hi:step or a single value, got {s:?}")),
    }
}

/// Index range `[start, end)` of the returns dated within `[from, to]`,
/// defaulting to the last `len` returns up to `to`.
fn window(series: &ReturnSeries, from: Option<NaiveDate>, to: Option<NaiveDate>, len: usize) -> CliResult<(usize, usize)> {
    let end = match to {
        Some(d) => series.dates().partition_point(|x| *x <= d),
        None => series.len(),
    };
    let start = match from {
        Some(d) => series.index_on_or_after(d),
        None => end.saturating_sub(len),
    };
    if start >= end {
        return usage("empty calibration window");
    }
    Ok((start, end))
}

pub fn calibrate(a: &CalibrateArgs) -> CliResult<()> {
    require_file(&a.returns, "returns")?;
    out_check(a.out.as_deref(), &[&a.returns])?;
    let grid = CalibrationGrid {
        d: parse_axis(&a.d_grid, "d")?,
        nu: parse_axis(&a.nu_grid, "nu")?,
        alpha: parse_axis(&a.alpha_grid, "alpha")?,
    };
    let mut manifest = Manifest::new("calibrate", Some(a.seed));
    let series = read_returns(&a.returns, &mut manifest)?;
    for (k, v) in [
        ("m", a.m.to_string()),
        ("d_grid", a.d_grid.clone()),
        ("nu_grid", a.nu_grid.clone()),
        ("alpha_grid", a.alpha_grid.clone()),
        ("mc_budget", a.mc_budget.to_string()),
        ("bootstrap_reps", a.bootstrap_reps.to_string()),
        ("scale_paths", a.scale_paths.to_string()),
        ("covariance_shrinkage", opt(a.covariance_shrinkage)),
        ("shape_start", format!("{:?}", a.shape_start)),
        ("shape_end", format!("{:?}", a.shape_end)),
        ("scale_start", format!("{:?}", a.scale_start)),
        ("scale_end", format!("{:?}", a.scale_end)),
    ] {
        manifest.set(k, v);
    }
    let (s0, s1) = window(&series, a.shape_start, a.shape_end, 1260)?;
    let shape_series = series.slice(s0, s1)?;
    let scale_to = a.scale_end.or(a.shape_end);
    let (c0, c1) = window(&series, a.scale_start, scale_to, 252)?;
    let cfg = ShapeCalibrationConfig {
        m: a.m,
        mc_budget: a.mc_budget,
        bootstrap_reps: a.bootstrap_reps,
        weighting: match a.covariance_shrinkage {
            Some(shrinkage) => Weighting::Covariance { shrinkage },
            None => Weighting::Diagonal,
        },
        ..ShapeCalibrationConfig::default()
    };
    let shape = calibrate_shape(&shape_series, &grid, &cfg, a.seed)?;
    let scale_cfg = ScaleCalibrationConfig { n_paths: a.scale_paths, ..ScaleCalibrationConfig::default() };
    let scale = calibrate_scale(&series.returns()[c0..c1], &shape.params, &scale_cfg, derive_seed(a.seed, 1, 0))?;
    let mut kv = calibration_to_kv(&shape, Some(&scale));
    kv.set("calibration.scale_window_len", c1 - c0);
    kv.set("calibration.scale_window_start", series.dates()[c0].format("%Y-%m-%d"));
    kv.set("calibration.scale_window_end", series.dates()[c1 - 1].format("%Y-%m-%d"));
    let mut body = Vec::new();
    kv.write(&mut body)?;
    Sink::new(&manifest).emit(a.out.as_deref(), &body)
}

fn date_index(series: &ReturnSeries, date: Option<NaiveDate>) -> CliResult<usize> {
    match date {
        Some(d) => Ok(pricing_step(series, d)?),
        None if series.is_empty() => usage("empty return series"),
        None => Ok(series.len() + 1),
    }
}

pub fn infer_restarts(a: &InferArgs) -> CliResult<()> {
    require_file(&a.returns, "returns")?;
    a.config.check_paths()?;
    out_check(a.out.as_deref(), &[&a.returns])?;
    let mut manifest = Manifest::new("infer-restarts", Some(a.seed));
    let mut settings = a.config.load(&mut manifest)?;
    if let Some(n) = a.samples {
        settings.pricing.inference.n_mc = n;
    }
    manifest.set("date", format!("{:?}", a.date));
    manifest.set("samples", settings.pricing.inference.n_mc);
    let series = read_returns(&a.returns, &mut manifest)?;
    let t0 = date_index(&series, a.date)?;
    let posterior = PastPosterior::new(&series.returns()[..t0 - 1], t0, &settings.params, &settings.pricing.inference)?;
    let paths = posterior.sample_configured(derive_seed(a.seed, STREAM_POSTERIOR, t0 as u64))?;
    let mut body = Vec::new();
    swarch::inference::write_restart_samples(&paths, &mut body)?;
    Sink::new(&manifest).emit(a.out.as_deref(), &body)
}

fn calendar_span(rows: &[ContractRow]) -> (NaiveDate, NaiveDate) {
    let lo = rows.iter().map(|r| r.quote_date).min().expect("non-empty");
    let hi = rows.iter().map(|r| r.expiry).max().expect("non-empty");
    (lo, hi)
}

pub fn price(a: &PriceArgs) -> CliResult<()> {
    require_file(&a.contracts, "contracts")?;
    require_file(&a.returns, "returns")?;
    a.config.check_paths()?;
    let mut inputs = vec![a.contracts.as_path(), a.returns.as_path()];
    inputs.extend(a.calendar.as_deref());
    inputs.extend(a.rates.as_deref());
    for p in a.calendar.iter().chain(&a.rates) {
        require_file(p, "input")?;
    }
    out_check(a.out.as_deref(), &inputs)?;
    let mut manifest = Manifest::new("price", Some(a.seed));
    let settings = a.config.load(&mut manifest)?;
    let series = read_returns(&a.returns, &mut manifest)?;
    let rows = read_contracts(&a.contracts, &mut manifest)?;
    if rows.is_empty() {
        return Err(swarch::Error::Data("no contracts".into()).into());
    }
    let (lo, hi) = calendar_span(&rows);
    let calendar = read_calendar(a.calendar.as_deref(), lo, hi, &mut manifest)?;
    let curve = match &a.rates {
        Some(p) => Some(read_rates(p, a.allow_negative_rates, &mut manifest)?),
        None => None,
    };
    let bs_vol = match settings.sigma_bs {
        Some(s) => BsVolatility::Fixed(s),
        None => BsVolatility::Rolling(252),
    };
    let mut by_date: BTreeMap<NaiveDate, Vec<(usize, ContractRow)>> = BTreeMap::new();
    for (k, r) in rows.iter().enumerate() {
        by_date.entry(r.quote_date).or_default().push((k, *r));
    }
    let mut lines = vec![String::new(); rows.len()];
    for (date, group) in by_date {
        let t0 = pricing_step(&series, date)?;
        let history = &series.returns()[..t0 - 1];
        let mut steps = Vec::with_capacity(group.len());
        for (_, r) in &group {
            let n = calendar
                .trading_days_between(r.quote_date, r.expiry)
                .filter(|n| *n > 0)
                .ok_or_else(|| swarch::Error::Data(format!("no trading days between {} and {}", r.quote_date, r.expiry)))?;
            steps.push(n);
        }
        let max_steps = steps.iter().copied().max().unwrap_or(1);
        let pricer = PreparedPricer::new(
            history,
            t0,
            &settings.params,
            &settings.pricing,
            max_steps,
            derive_seed(a.seed, STREAM_POSTERIOR, t0 as u64),
        )?;
        let sigma_bs = bs_vol.at(history)?;
        for ((k, r), n) in group.iter().zip(steps) {
            let rate = match &curve {
                Some(c) => per_step_rate(c.select_rate(date, n)?, DAYS_PER_YEAR),
                None => settings.params.r,
            };
            let maturity = t0 + n - 1;
            let res = pricer.price_at_rate(r.strike, maturity, r.s_prev, rate, settings.pricing.inference.max_future_restarts)?;
            let contract = ContractSpec::new(r.strike, t0, maturity, r.s_prev)?;
            let bs = bs_price(&contract, sigma_bs, rate)?;
            let iv_model = bs_implied_vol(&contract, res.price, rate).ok().map(annualize);
            let iv_market = r.price.and_then(|p| bs_implied_vol(&contract, p, rate).ok()).map(annualize);
            lines[*k] = format!(
                "{},{},{},{},{},{},{}",
                r.strike,
                r.expiry.format("%Y-%m-%d"),
                res.price,
                res.delta,
                bs,
                opt(iv_model),
                opt(iv_market)
            );
        }
    }
    let mut body = Vec::new();
    writeln!(body, "strike,expiry,model_price,delta,bs_price,implied_vol_model,implied_vol_market")?;
    for l in lines {
        writeln!(body, "{l}")?;
    }
    Sink::new(&manifest).emit(a.out.as_deref(), &body)
}

const EVAL_FILES: [&str; 5] = ["report.csv", "maturity_errors.csv", "smile.csv", "records.csv", "rejections.csv"];

pub fn evaluate(a: &EvaluateArgs) -> CliResult<()> {
    for (p, what) in [(&a.chain, "chain"), (&a.returns, "returns"), (&a.rates, "rates")] {
        require_file(p, what)?;
    }
    if let Some(c) = &a.calendar {
        require_file(c, "calendar")?;
    }
    a.config.check_paths()?;
    let mut inputs = vec![a.chain.as_path(), a.returns.as_path(), a.rates.as_path()];
    inputs.extend(a.calendar.as_deref());
    inputs.extend(a.config.config.as_deref());
    let paths = prepare_dir(&a.out_dir, &EVAL_FILES, &inputs)?;
    let mut manifest = Manifest::new("evaluate", Some(a.seed));
    let settings = a.config.load(&mut manifest)?;
    manifest.set("all_weekdays", a.all_weekdays);
    manifest.set("bs_window", a.bs_window);
    manifest.set("allow_negative_rates", a.allow_negative_rates);
    let series = read_returns(&a.returns, &mut manifest)?;
    manifest.input("chain", &a.chain)?;
    let quotes = read_chain(File::open(&a.chain)?)?;
    if quotes.is_empty() {
        return Err(swarch::Error::Data("empty option chain".into()).into());
    }
    let lo = quotes.iter().map(|q| q.quote_date).min().expect("non-empty");
    let hi = quotes.iter().map(|q| q.expiry).max().expect("non-empty");
    let calendar = read_calendar(a.calendar.as_deref(), lo, hi, &mut manifest)?;
    let curve = read_rates(&a.rates, a.allow_negative_rates, &mut manifest)?;
    let filter_cfg = FilterConfig { wednesday_only: !a.all_weekdays, ..FilterConfig::default() };
    let outcome = filter_chain(&quotes, &calendar, &curve, &filter_cfg);
    let bs_vol = match settings.sigma_bs {
        Some(s) => BsVolatility::Fixed(s),
        None => BsVolatility::Rolling(a.bs_window),
    };
    let model = MarketModel::new(settings.params, bs_vol)?;
    let records = evaluate_calls(&outcome, &series, &model, &settings.pricing, a.seed)?;

    let (smile_date, smile_expiry) = match (a.smile_date, a.smile_expiry) {
        (Some(d), Some(e)) => (Some(d), Some(e)),
        (None, None) => {
            let mut counts: BTreeMap<(NaiveDate, NaiveDate), usize> = BTreeMap::new();
            for r in &records {
                *counts.entry((r.quote.quote_date, r.quote.expiry)).or_default() += 1;
            }
            let best = counts.iter().max_by(|x, y| x.1.cmp(y.1).then(y.0.cmp(x.0))).map(|(k, _)| *k);
            (best.map(|b| b.0), best.map(|b| b.1))
        }
        _ => return usage("--smile-date and --smile-expiry go together"),
    };
    let smile_points = match (smile_date, smile_expiry) {
        (Some(d), Some(e)) => smile(&records, d, e),
        _ => Vec::new(),
    };

    let sink = Sink::new(&manifest);
    let mut buf = Vec::new();
    bucket_and_report(&records).write_csv(&mut buf)?;
    sink.emit(Some(&paths[0]), &buf)?;
    buf.clear();
    write_maturity_errors(&mse_by_maturity(&records), &mut buf)?;
    sink.emit(Some(&paths[1]), &buf)?;
    buf.clear();
    write_smile(&smile_points, &mut buf)?;
    sink.emit(Some(&paths[2]), &buf)?;
    buf.clear();
    write_records(&records, &mut buf)?;
    sink.emit(Some(&paths[3]), &buf)?;
    buf.clear();
    outcome.write_rejections(&mut buf)?;
    sink.emit(Some(&paths[4]), &buf)
}

pub fn implied_vol(a: &ImpliedVolArgs) -> CliResult<()> {
    require_file(&a.contracts, "contracts")?;
    if let Some(c) = &a.calendar {
        require_file(c, "calendar")?;
    }
    let mut inputs = vec![a.contracts.as_path()];
    inputs.extend(a.calendar.as_deref());
    out_check(a.out.as_deref(), &inputs)?;
    let mut manifest = Manifest::new("implied-vol", None);
    manifest.set("rate", a.rate);
    let rows = read_contracts(&a.contracts, &mut manifest)?;
    if rows.is_empty() {
        return Err(swarch::Error::Data("no contracts".into()).into());
    }
    let (lo, hi) = calendar_span(&rows);
    let calendar = read_calendar(a.calendar.as_deref(), lo, hi, &mut manifest)?;
    let r = per_step_rate(a.rate, DAYS_PER_YEAR);
    let mut body = Vec::new();
    writeln!(body, "quote_date,expiry,strike,trading_days,price,implied_vol")?;
    for row in &rows {
        let Some(p) = row.price else {
            return Err(swarch::Error::Data(format!("contract {} {} has no price", row.expiry, row.strike)).into());
        };
        let n = calendar
            .trading_days_between(row.quote_date, row.expiry)
            .filter(|n| *n > 0)
            .ok_or_else(|| swarch::Error::Data(format!("no trading days between {} and {}", row.quote_date, row.expiry)))?;
        let contract = ContractSpec::new(row.strike, 1, n, row.s_prev)?;
        let iv = bs_implied_vol(&contract, p, r).ok().map(annualize);
        writeln!(
            body,
            "{},{},{},{n},{p},{}",
            row.quote_date.format("%Y-%m-%d"),
            row.expiry.format("%Y-%m-%d"),
            row.strike,
            opt(iv)
        )?;
    }
    Sink::new(&manifest).emit(a.out.as_deref(), &body)
}

const PLOT_FILES: [&str; 3] = ["a_coefficients.csv", "scaling.csv", "mixing_density.csv"];

pub fn emit_plots(a: &PlotArgs) -> CliResult<()> {
    a.config.check_paths()?;
    let mut inputs: Vec<&Path> = a.config.config.iter().map(|p| p.as_path()).collect();
    if let Some(r) = &a.returns {
        require_file(r, "returns")?;
        inputs.push(r);
    }
    let paths = prepare_dir(&a.out_dir, &PLOT_FILES, &inputs)?;
    let mut manifest = Manifest::new("emit-plots", Some(a.seed));
    let settings = a.config.load(&mut manifest)?;
    manifest.set("max_state", a.max_state);
    manifest.set("horizon", a.horizon);
    manifest.set("date", format!("{:?}", a.date));
    let series = match &a.returns {
        Some(p) => Some(read_returns(p, &mut manifest)?),
        None => None,
    };
    let sink = Sink::new(&manifest);
    let params = settings.params;

    let mut buf = Vec::new();
    writeln!(buf, "i_state,a_coeff")?;
    let mut i = 1u64;
    while i <= a.max_state.max(1) {
        writeln!(buf, "{i},{}", a_coefficient(i, params.d)?)?;
        // Dense at small states, then roughly 40 points per decade.
        i = if i < 100 { i + 1 } else { (i as f64 * 1.06).ceil() as u64 };
    }
    sink.emit(Some(&paths[0]), &buf)?;

    let Some(series) = series else {
        return Ok(());
    };
    buf.clear();
    let q_set = [0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0];
    let max_tau = (series.len() / 5).clamp(1, 256);
    let mut tau_set = vec![1usize];
    while tau_set.last().copied().unwrap_or(1) * 2 <= max_tau {
        tau_set.push(tau_set.last().copied().unwrap_or(1) * 2);
    }
    let table = empirical_moments(series.returns(), &q_set, &tau_set, 1)?;
    writeln!(buf, "q,tau,ln_abs_moment,hurst")?;
    for (qi, q) in q_set.iter().enumerate() {
        let h = if tau_set.len() > 1 { table.hurst(qi)?.to_string() } else { String::new() };
        for (ti, tau) in tau_set.iter().enumerate() {
            writeln!(buf, "{q},{tau},{},{h}", table.abs_moments[qi][ti].ln())?;
        }
    }
    sink.emit(Some(&paths[1]), &buf)?;

    buf.clear();
    let t0 = date_index(&series, a.date)?;
    let history = &series.returns()[..t0 - 1];
    let m = params.m;
    if history.len() < m || a.horizon == 0 {
        return usage(format!("mixing density needs at least M = {m} returns and a positive horizon"));
    }
    let posterior = PastPosterior::new(history, t0, &params, &settings.pricing.inference)?;
    let past = posterior.sample(1, derive_seed(a.seed, STREAM_POSTERIOR, t0 as u64))?.remove(0);
    let last = *past.states.last().expect("non-empty path");
    let tail: Vec<u64> = (1..=a.horizon as u64).map(|k| last + k).collect();
    let path: RestartPath = past.extend(&tail, past.weight)?;
    let rho = build_rho_bar(
        &history[history.len() - m..],
        &path,
        t0,
        t0 + a.horizon - 1,
        &params,
        settings.pricing.prior,
        settings.pricing.n_real,
        a.seed,
    )?;
    rho.write_plot_csv(&default_sigma_grid(&params)?, &mut buf)?;
    sink.emit(Some(&paths[2]), &buf)
}
