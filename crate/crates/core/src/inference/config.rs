use crate::error::{domain, Result};
use crate::model::ModelParams;

/// How the unbounded sum over the first state of a window is closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TailMode {
    /// Stop at `i_max`. Marginals are then monotone in `i_max`.
    Truncate,
    /// Sum exactly up to `i_max` and add a midpoint Euler–Maclaurin
    /// estimate of the remainder.
    #[default]
    EulerMaclaurin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceConfig {
    /// Half-width of the local window.
    pub tau: usize,
    /// Number of sampled past restart strings.
    pub n_mc: usize,
    /// Exact-summation bound for unconstrained states; `None` selects
    /// [`InferenceConfig::default_i_max`].
    pub i_max: Option<u64>,
    pub tail: TailMode,
    /// Largest number of restarts enumerated between pricing and maturity.
    pub max_future_restarts: usize,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig { tau: 3, n_mc: 20, i_max: None, tail: TailMode::default(), max_future_restarts: 2 }
    }
}

impl InferenceConfig {
    /// `M + tau + ceil(ln 1e-12 / ln(1 - nu))`, capped at `10 (M + tau)`.
    pub fn default_i_max(&self, params: &ModelParams<f64>) -> u64 {
        let base = (params.m + self.tau) as u64;
        let cap = 10 * base;
        if params.nu >= 1.0 {
            return base;
        }
        let geo = ((1e-12f64).ln() / (-params.nu).ln_1p()).ceil();
        if geo >= cap as f64 {
            cap
        } else {
            (base + geo as u64).min(cap)
        }
    }

    pub fn resolved_i_max(&self, params: &ModelParams<f64>) -> u64 {
        self.i_max.unwrap_or_else(|| self.default_i_max(params))
    }

    pub fn validate(&self, params: &ModelParams<f64>) -> Result<()> {
        if self.tau < 1 {
            return domain("tau must be at least 1");
        }
        if self.n_mc < 1 {
            return domain("n_mc must be at least 1");
        }
        if self.resolved_i_max(params) < (params.m + self.tau) as u64 {
            return domain(format!("i_max must be at least M + tau = {}", params.m + self.tau));
        }
        if !(1..=3).contains(&self.max_future_restarts) {
            return domain("max_future_restarts must be 1, 2 or 3");
        }
        Ok(())
    }
}
