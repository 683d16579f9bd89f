//! Option pricing under the martingale measure.

mod black_scholes;
mod closed_form;
mod engine;
mod kernel;

pub use black_scholes::{bs_implied_vol, bs_price, per_step_rate};
pub use closed_form::{
    call_delta_from_sigma_tilde, call_price_from_sigma_tilde, conditional_call_price, conditional_delta,
    price_bounds, sigma_tilde, ContractSpec,
};
pub use engine::{price_option, PreparedPricer, PriceResult, PricingConfig, SigmaTildeStats};
pub use kernel::martingale_kernel;
