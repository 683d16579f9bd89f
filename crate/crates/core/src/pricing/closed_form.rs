use crate::error::{domain, Result};
use crate::model::{sum_a_squared, ModelParams};
use crate::scalar::Scalar;

/// A European call written at step `t0` on the level `s_prev = S_{t0-1}`,
/// expiring at step `maturity`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractSpec {
    pub strike: f64,
    pub t0: usize,
    pub maturity: usize,
    pub s_prev: f64,
}

impl ContractSpec {
    pub fn new(strike: f64, t0: usize, maturity: usize, s_prev: f64) -> Result<Self> {
        let c = ContractSpec { strike, t0, maturity, s_prev };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.strike > 0.0 && self.strike.is_finite()) {
            return domain(format!("strike must be positive, got {}", self.strike));
        }
        if !(self.s_prev > 0.0 && self.s_prev.is_finite()) {
            return domain(format!("underlying level must be positive, got {}", self.s_prev));
        }
        if self.maturity < self.t0 {
            return domain(format!("maturity {} precedes pricing step {}", self.maturity, self.t0));
        }
        Ok(())
    }

    /// Number of return steps `T - t0 + 1` up to expiry.
    pub fn steps(&self) -> usize {
        self.maturity - self.t0 + 1
    }
}

/// `sigma * sqrt(sum_t a^2(i_t))`.
pub fn sigma_tilde<S: Scalar>(sigma: S, states: &[u64], d: S) -> S {
    sigma * sum_a_squared(states, d).sqrt()
}

struct Terms<S> {
    growth: S,
    moneyness: S,
    discounted_strike: S,
}

fn terms<S: Scalar>(s_prev: S, strike: S, steps: usize, r: S) -> Terms<S> {
    let n = S::from_usize(steps).expect("step count fits scalar");
    let ln_growth = r.ln_1p();
    Terms {
        growth: S::one() + r,
        moneyness: (s_prev / strike).ln() + n * ln_growth,
        discounted_strike: strike * (-n * ln_growth).exp(),
    }
}

/// Call price from the effective volatility:
/// `(1 + r) [S N(d+) - K (1 + r)^{-n} N(d-)]`, with the deterministic
/// limit `(1 + r) max(S - K (1 + r)^{-n}, 0)` at `sigma_tilde = 0`.
pub fn call_price_from_sigma_tilde<S: Scalar>(s_prev: S, strike: S, steps: usize, r: S, sigma_tilde: S) -> S {
    let t = terms(s_prev, strike, steps, r);
    if sigma_tilde <= S::zero() {
        return t.growth * (s_prev - t.discounted_strike).max(S::zero());
    }
    let half = sigma_tilde * sigma_tilde / S::lit(2.0);
    let d_plus = (t.moneyness + half) / sigma_tilde;
    let d_minus = (t.moneyness - half) / sigma_tilde;
    let value = s_prev * d_plus.norm_cdf() - t.discounted_strike * d_minus.norm_cdf();
    // Cancellation can round below the intrinsic bound far from the money.
    t.growth * value.max((s_prev - t.discounted_strike).max(S::zero()))
}

/// Hedge ratio `(1 + r) N(d+)`.
pub fn call_delta_from_sigma_tilde<S: Scalar>(s_prev: S, strike: S, steps: usize, r: S, sigma_tilde: S) -> S {
    let t = terms(s_prev, strike, steps, r);
    if sigma_tilde <= S::zero() {
        let gap = s_prev - t.discounted_strike;
        let step = if gap > S::zero() {
            S::one()
        } else if gap < S::zero() {
            S::zero()
        } else {
            S::lit(0.5)
        };
        return t.growth * step;
    }
    let d_plus = (t.moneyness + sigma_tilde * sigma_tilde / S::lit(2.0)) / sigma_tilde;
    t.growth * d_plus.norm_cdf()
}

fn check_inputs<S: Scalar>(contract: &ContractSpec, sigma: S, states: &[u64]) -> Result<()> {
    contract.validate()?;
    if sigma < S::zero() || !sigma.is_finite() {
        return domain(format!("sigma must be nonnegative, got {sigma}"));
    }
    if states.len() != contract.steps() {
        return domain(format!("{} states for {} steps", states.len(), contract.steps()));
    }
    if states.iter().any(|&i| i < 1) {
        return domain("states must be at least 1");
    }
    Ok(())
}

/// Call price given the volatility and the future states `i_{t0}..i_T`.
pub fn conditional_call_price<S: Scalar>(
    contract: &ContractSpec,
    sigma: S,
    states: &[u64],
    params: &ModelParams<S>,
) -> Result<S> {
    check_inputs(contract, sigma, states)?;
    Ok(call_price_from_sigma_tilde(
        S::lit(contract.s_prev),
        S::lit(contract.strike),
        contract.steps(),
        params.r,
        sigma_tilde(sigma, states, params.d),
    ))
}

/// Delta matching [`conditional_call_price`].
pub fn conditional_delta<S: Scalar>(
    contract: &ContractSpec,
    sigma: S,
    states: &[u64],
    params: &ModelParams<S>,
) -> Result<S> {
    check_inputs(contract, sigma, states)?;
    Ok(call_delta_from_sigma_tilde(
        S::lit(contract.s_prev),
        S::lit(contract.strike),
        contract.steps(),
        params.r,
        sigma_tilde(sigma, states, params.d),
    ))
}

/// No-arbitrage range of the call price under the measure:
/// `[(1 + r) max(S - K (1 + r)^{-n}, 0), (1 + r) S]`.
pub fn price_bounds(contract: &ContractSpec, r: f64) -> (f64, f64) {
    let lower = call_price_from_sigma_tilde(contract.s_prev, contract.strike, contract.steps(), r, 0.0);
    (lower, (1.0 + r) * contract.s_prev)
}
