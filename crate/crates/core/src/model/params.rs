use crate::error::{domain, Result};
use crate::scalar::Scalar;

/// Parameters of the switching ARCH model and of the pricing market.
///
/// `d` is the scaling exponent of the restart modulation, `nu` the restart
/// probability per step, `alpha`/`beta` the shape and scale of the
/// inverse-Gamma volatility prior, `m` the ARCH memory, `mu` the mean
/// log-return per step and `r` the risk-free rate per step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams<S> {
    pub d: S,
    pub nu: S,
    pub alpha: S,
    pub beta: S,
    pub m: usize,
    pub mu: S,
    pub r: S,
}

impl<S: Scalar> ModelParams<S> {
    pub fn new(d: S, nu: S, alpha: S, beta: S, m: usize, mu: S, r: S) -> Result<Self> {
        let p = ModelParams { d, nu, alpha, beta, m, mu, r };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let zero = S::zero();
        if !(self.d > zero) || !self.d.is_finite() {
            return domain(format!("D must be positive, got {}", self.d));
        }
        if !(self.nu > zero && self.nu <= S::one()) {
            return domain(format!("nu must lie in (0, 1], got {}", self.nu));
        }
        if !(self.alpha > zero) || !self.alpha.is_finite() {
            return domain(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.beta > zero) || !self.beta.is_finite() {
            return domain(format!("beta must be positive, got {}", self.beta));
        }
        if self.m < 1 {
            return domain("memory M must be at least 1");
        }
        if !self.mu.is_finite() {
            return domain("mu must be finite");
        }
        if !(self.r >= zero) || !self.r.is_finite() {
            return domain(format!("r must be non-negative, got {}", self.r));
        }
        Ok(())
    }

    /// `gamma = ln(1 + r) - mu`, the drift correction of the martingale kernel.
    pub fn gamma(&self) -> S {
        self.r.ln_1p() - self.mu
    }

    pub fn with_beta(mut self, beta: S) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_mu(mut self, mu: S) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_r(mut self, r: S) -> Self {
        self.r = r;
        self
    }

    /// Convert between scalar types.
    pub fn cast<T: Scalar>(&self) -> ModelParams<T> {
        let c = |x: S| T::lit(x.to_f64_lossy());
        ModelParams {
            d: c(self.d),
            nu: c(self.nu),
            alpha: c(self.alpha),
            beta: c(self.beta),
            m: self.m,
            mu: c(self.mu),
            r: c(self.r),
        }
    }
}
