mod artifact;
mod commands;
mod error;
mod inputs;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use crate::inputs::{parse_date, ConfigArgs};

#[derive(Debug, Parser)]
#[command(name = "swarch", version, about = "Switching ARCH simulation, calibration and option pricing")]
struct Cli {
    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a return path.
    Simulate(SimulateArgs),
    /// Fit (D, nu, alpha) on a long window and (beta, sigma_bs, mu) on a short one.
    Calibrate(CalibrateArgs),
    /// Sample past restart strings given the returns up to a date.
    InferRestarts(InferArgs),
    /// Price call contracts with the model and the Black–Scholes benchmark.
    Price(PriceArgs),
    /// Filter an option chain, price its calls and write error reports.
    Evaluate(EvaluateArgs),
    /// Black–Scholes implied volatilities of quoted call prices.
    ImpliedVol(ImpliedVolArgs),
    /// Write plotting data: modulation coefficients, scaling moments, mixing density.
    EmitPlots(PlotArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub days: usize,
    #[arg(long)]
    pub seed: u64,
    /// Date of the first simulated return; later dates follow on weekdays.
    #[arg(long, value_parser = parse_date, default_value = "2000-01-03")]
    pub start: NaiveDate,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Return series CSV (`date,log_return`).
    #[arg(long)]
    pub returns: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// First and last date of the shape window; defaults to the last 1260 returns.
    #[arg(long, value_parser = parse_date)]
    pub shape_start: Option<NaiveDate>,
    #[arg(long, value_parser = parse_date)]
    pub shape_end: Option<NaiveDate>,
    /// First and last date of the scale window; defaults to the 252 returns ending at the shape window's end.
    #[arg(long, value_parser = parse_date)]
    pub scale_start: Option<NaiveDate>,
    #[arg(long, value_parser = parse_date)]
    pub scale_end: Option<NaiveDate>,
    #[arg(long, default_value_t = 21)]
    pub m: usize,
    /// Grid axes as `lo:hi:step`.
    #[arg(long, default_value = "0.1:0.35:0.005")]
    pub d_grid: String,
    #[arg(long, default_value = "0.0001:0.001:0.0001")]
    pub nu_grid: String,
    #[arg(long, default_value = "3:10:0.5")]
    pub alpha_grid: String,
    /// Simulated paths per grid cell.
    #[arg(long, default_value_t = 200)]
    pub mc_budget: usize,
    #[arg(long, default_value_t = 200)]
    pub bootstrap_reps: usize,
    /// Weight moments with the full shrunk bootstrap covariance instead of its diagonal.
    #[arg(long)]
    pub covariance_shrinkage: Option<f64>,
    /// Simulated paths for the beta fit.
    #[arg(long, default_value_t = 2000)]
    pub scale_paths: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub returns: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// Condition on returns up to and including this date; defaults to the last one.
    #[arg(long, value_parser = parse_date)]
    pub date: Option<NaiveDate>,
    /// Number of strings; defaults to the configured `n_mc`.
    #[arg(long)]
    pub samples: Option<usize>,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PriceArgs {
    /// Contracts CSV (`quote_date,expiry,strike,S_prev[,price]`).
    #[arg(long)]
    pub contracts: PathBuf,
    #[arg(long)]
    pub returns: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// Trading calendar, one ISO date per line; weekdays when omitted.
    #[arg(long)]
    pub calendar: Option<PathBuf>,
    /// Rate curve CSV (`date,r1m,r3m,r6m,r12m`, annualized); the configured per-step `r` when omitted.
    #[arg(long)]
    pub rates: Option<PathBuf>,
    #[arg(long)]
    pub allow_negative_rates: bool,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Option chain CSV (`quote_date,expiry,strike,cp_flag,price,underlying_close`).
    #[arg(long)]
    pub chain: PathBuf,
    #[arg(long)]
    pub returns: PathBuf,
    #[arg(long)]
    pub rates: PathBuf,
    #[arg(long)]
    pub calendar: Option<PathBuf>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub allow_negative_rates: bool,
    /// Keep quotes from every weekday, not only Wednesdays.
    #[arg(long)]
    pub all_weekdays: bool,
    /// Returns in the rolling Black–Scholes volatility window when the config has no `sigma_bs`.
    #[arg(long, default_value_t = 252)]
    pub bs_window: usize,
    /// Slice for the smile file; defaults to the slice with most priced calls.
    #[arg(long, value_parser = parse_date)]
    pub smile_date: Option<NaiveDate>,
    #[arg(long, value_parser = parse_date)]
    pub smile_expiry: Option<NaiveDate>,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ImpliedVolArgs {
    /// Contracts CSV with a `price` column.
    #[arg(long)]
    pub contracts: PathBuf,
    #[arg(long)]
    pub calendar: Option<PathBuf>,
    /// Annualized rate; converted to a per-step rate on a 252-day year.
    #[arg(long, default_value_t = 0.0)]
    pub rate: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub seed: u64,
    /// Return series for the scaling and mixing-density files.
    #[arg(long)]
    pub returns: Option<PathBuf>,
    /// Pricing date for the mixing density; defaults to the last return.
    #[arg(long, value_parser = parse_date)]
    pub date: Option<NaiveDate>,
    /// Steps to maturity for the mixing density.
    #[arg(long, default_value_t = 21)]
    pub horizon: usize,
    /// Largest restart state in the coefficient file.
    #[arg(long, default_value_t = 5000)]
    pub max_state: u64,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("{}", error::CliError::Usage(format!("cannot start thread pool: {e}")).to_json());
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Calibrate(a) => commands::calibrate(a),
        Command::InferRestarts(a) => commands::infer_restarts(a),
        Command::Price(a) => commands::price(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::ImpliedVol(a) => commands::implied_vol(a),
        Command::EmitPlots(a) => commands::emit_plots(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
