//! Option chains, rate curves and trading calendars; the quote filters,
//! dividend adjustment and bucketed error reports used for out-of-sample
//! evaluation.

mod calendar;
mod filter;
mod parity;
mod quotes;
mod rates;
mod report;

pub use calendar::TradingCalendar;
pub use filter::{filter_chain, ChainSlice, FilterConfig, FilterOutcome, RejectReason, Rejection};
pub use parity::{dividend_adjusted_index, ParityAdjustment};
pub use quotes::{read_chain, write_chain, OptionKind, OptionQuote};
pub use rates::{tenor_for_days, RateCurve, Tenor};
pub use report::{
    bucket_and_report, dtm_bucket, dtm_label, moneyness_bucket, moneyness_label, mse_by_maturity, write_maturity_errors,
    EvaluationRecord, EvaluationReport, MaturityError, ReportCell, DTM_EDGES, MONEYNESS_EDGES,
};
