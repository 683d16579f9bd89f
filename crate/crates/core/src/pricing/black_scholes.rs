use super::closed_form::{call_price_from_sigma_tilde, price_bounds, ContractSpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-step rate `(1 + r_annual)^{1/days} - 1`.
pub fn per_step_rate(annual: f64, days_per_year: f64) -> f64 {
    (annual.ln_1p() / days_per_year).exp_m1()
}

/// Discrete-time Black–Scholes price: the conditional price with `a = 1`
/// and per-step volatility `sigma_bs`.
pub fn bs_price(contract: &ContractSpec, sigma_bs: f64, r: f64) -> Result<f64> {
    contract.validate()?;
    if !(sigma_bs >= 0.0 && sigma_bs.is_finite()) {
        return Err(Error::Domain(format!("volatility must be nonnegative, got {sigma_bs}")));
    }
    let n = contract.steps();
    Ok(call_price_from_sigma_tilde(contract.s_prev, contract.strike, n, r, sigma_bs * (n as f64).sqrt()))
}

/// Per-step volatility reproducing `market_price` under [`bs_price`].
pub fn bs_implied_vol(contract: &ContractSpec, market_price: f64, r: f64) -> Result<f64> {
    contract.validate()?;
    let (lower, upper) = price_bounds(contract, r);
    if !market_price.is_finite() || market_price <= lower || market_price >= upper {
        return Err(Error::NoSolution(format!(
            "price {market_price} outside the open no-arbitrage range ({lower}, {upper})"
        )));
    }
    let n = contract.steps();
    let (s, k) = (contract.s_prev, contract.strike);
    let f = |v: f64| call_price_from_sigma_tilde(s, k, n, r, v) - market_price;
    let vega = |v: f64| {
        let m = (s / k).ln() + n as f64 * r.ln_1p();
        let d_plus = (m + v * v / 2.0) / v;
        (1.0 + r) * s * d_plus.norm_pdf()
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::NoSolution(format!("no volatility reaches price {market_price}")));
        }
    }
    // Start from the at-the-money approximation, clipped to the bracket.
    let mut v = ((2.0 * std::f64::consts::PI).sqrt() * market_price / ((1.0 + r) * s)).clamp(lo, hi);
    if v <= lo || v >= hi {
        v = 0.5 * (lo + hi);
    }
    for _ in 0..200 {
        let fv = f(v);
        if fv.abs() <= 1e-13 * market_price.max(1e-300) {
            break;
        }
        if fv < 0.0 {
            lo = v;
        } else {
            hi = v;
        }
        let step = fv / vega(v);
        let mut next = v - step;
        if !(next > lo && next < hi) || !step.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - v).abs() <= 1e-15 * v {
            v = next;
            break;
        }
        v = next;
    }
    Ok(v / (n as f64).sqrt())
}
