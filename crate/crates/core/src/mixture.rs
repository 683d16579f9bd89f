//! Mixing densities over a single Gaussian volatility: the one-step
//! posterior `rho_hat` and its restart-weighted average `rho_bar`.
//!
//! `rho_bar` is carried as a finite mixture of inverse-Gamma components, one
//! per (future step, forward realization) pair, so expectations against it
//! reduce to expectations against each component.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Gamma as GammaDist};
use statrs::distribution::{ContinuousCDF, Gamma};
use statrs::function::gamma::gamma_ur;

use crate::error::{domain, Result};
use crate::model::{a_squared, continue_y, inverse_gamma_sigma_density, ModelParams, ResidualSampler, RestartPath};
use crate::rng::{derive_seed, STREAM_FORWARD};

/// Prior law of the mixing volatility.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum VolatilityPrior {
    /// Inverse-Gamma with the model's `alpha` and `beta`.
    #[default]
    InverseGamma,
    /// Degenerate law at a fixed volatility; the mixture stays degenerate.
    PointMass(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MixtureComponent {
    /// `sigma^2 ~ InvGamma(shape / 2, scale^2 / 2)`.
    InverseGamma { shape: f64, scale: f64 },
    PointMass { sigma: f64 },
}

impl MixtureComponent {
    /// Density at `sigma`; point masses have none and contribute zero.
    pub fn density(&self, sigma: f64) -> f64 {
        match *self {
            MixtureComponent::InverseGamma { shape, scale } => {
                inverse_gamma_sigma_density(sigma, shape, scale).unwrap_or(0.0)
            }
            MixtureComponent::PointMass { .. } => 0.0,
        }
    }

    pub fn cdf(&self, sigma: f64) -> f64 {
        match *self {
            MixtureComponent::InverseGamma { shape, scale } => {
                if sigma <= 0.0 {
                    0.0
                } else {
                    gamma_ur(shape / 2.0, scale * scale / (2.0 * sigma * sigma))
                }
            }
            MixtureComponent::PointMass { sigma: s } => f64::from(u8::from(sigma >= s)),
        }
    }

    /// `<sigma^2>`; infinite when the shape is at most 2.
    pub fn second_moment(&self) -> f64 {
        match *self {
            MixtureComponent::InverseGamma { shape, scale } => {
                if shape > 2.0 {
                    scale * scale / (shape - 2.0)
                } else {
                    f64::INFINITY
                }
            }
            MixtureComponent::PointMass { sigma } => sigma * sigma,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            MixtureComponent::InverseGamma { shape, scale } => {
                let g = GammaDist::new(shape / 2.0, 1.0).expect("positive shape").sample(rng);
                scale / (2.0 * g).sqrt()
            }
            MixtureComponent::PointMass { sigma } => sigma,
        }
    }
}

/// Where a mixture came from.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MixtureProvenance {
    pub t0: usize,
    pub t_end: usize,
    pub path_id: Option<usize>,
    pub n_realizations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureDensity {
    components: Vec<MixtureComponent>,
    weights: Vec<f64>,
    pub provenance: MixtureProvenance,
}

impl MixtureDensity {
    /// Build from nonnegative weights, normalized to one.
    pub fn new(components: Vec<MixtureComponent>, weights: Vec<f64>, provenance: MixtureProvenance) -> Result<Self> {
        if components.is_empty() || components.len() != weights.len() {
            return domain("mixture needs one weight per component and at least one component");
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return domain("mixture weights must be finite and nonnegative");
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return domain("mixture weights sum to zero");
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(MixtureDensity { components, weights, provenance })
    }

    pub fn single(component: MixtureComponent, provenance: MixtureProvenance) -> Self {
        MixtureDensity { components: vec![component], weights: vec![1.0], provenance }
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn weighted<F: Fn(&MixtureComponent) -> f64>(&self, f: F) -> f64 {
        self.components.iter().zip(&self.weights).map(|(c, w)| w * f(c)).sum()
    }

    pub fn density(&self, sigma: f64) -> f64 {
        self.weighted(|c| c.density(sigma))
    }

    pub fn cdf(&self, sigma: f64) -> f64 {
        self.weighted(|c| c.cdf(sigma))
    }

    pub fn second_moment(&self) -> f64 {
        self.weighted(|c| c.second_moment())
    }

    /// Expectation of `f(sigma)`, by quadrature within each component.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.weighted(|c| match *c {
            MixtureComponent::InverseGamma { shape, scale } => {
                let rule = crate::nodes::log_gamma_rule(shape / 2.0, 1.0);
                rule.nodes.iter().zip(&rule.weights).map(|(g, w)| w * f(scale / (2.0 * g).sqrt())).sum()
            }
            MixtureComponent::PointMass { sigma } => f(sigma),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut u: f64 = rng.random();
        for (c, &w) in self.components.iter().zip(&self.weights) {
            if u < w {
                return c.sample(rng);
            }
            u -= w;
        }
        self.components.last().expect("non-empty").sample(rng)
    }

    /// Write `sigma,density` rows over `grid`.
    pub fn write_plot_csv<W: Write>(&self, grid: &[f64], mut w: W) -> Result<()> {
        writeln!(w, "sigma,density")?;
        for &s in grid {
            writeln!(w, "{s},{}", self.density(s))?;
        }
        Ok(())
    }
}

/// Log-spaced `n`-point grid between the `p` and `1 - p` quantiles of the
/// inverse-Gamma volatility law with the given shape and scale.
pub fn sigma_grid(shape: f64, scale: f64, n: usize, p: f64) -> Result<Vec<f64>> {
    if !(shape > 0.0 && scale > 0.0) || n < 2 || !(p > 0.0 && p < 0.5) {
        return domain("grid needs positive shape and scale, n >= 2 and 0 < p < 1/2");
    }
    let g = Gamma::new(shape / 2.0, 1.0).map_err(|e| crate::Error::Domain(e.to_string()))?;
    // sigma = scale / sqrt(2 G) is decreasing in G.
    let lo = scale / (2.0 * g.inverse_cdf(1.0 - p)).sqrt();
    let hi = scale / (2.0 * g.inverse_cdf(p)).sqrt();
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect())
}

/// Default plotting grid for a parameter set: 400 points spanning the
/// `1e-4 .. 1 - 1e-4` quantiles of the prior.
pub fn default_sigma_grid(params: &ModelParams<f64>) -> Result<Vec<f64>> {
    sigma_grid(params.alpha, params.beta, 400, 1e-4)
}

/// Closed-form posterior of the volatility after `M` de-modulated returns:
/// inverse-Gamma with shape `alpha + M` and scale
/// `sqrt(beta^2 + sum y^2)`.
pub fn rho_hat_closed_form(sigma: f64, y_lags: &[f64], alpha: f64, beta: f64, m: usize) -> Result<f64> {
    if y_lags.len() != m {
        return domain(format!("expected {m} lags, got {}", y_lags.len()));
    }
    let scale = (beta * beta + y_lags.iter().map(|y| y * y).sum::<f64>()).sqrt();
    inverse_gamma_sigma_density(sigma, alpha + m as f64, scale)
}

/// Posterior scales `s_{t, r}` for `t = t0 .. t0 + n - 1`, obtained by
/// running the ARCH recursion forward from the de-modulated history.
/// Realization `r` uses the split stream `(seed, FORWARD, r)`, so the same
/// seed gives common random numbers across histories.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardScales {
    pub shape: f64,
    /// `scales[k][r]` is the scale for step `t0 + k`, realization `r`.
    pub scales: Vec<Vec<f64>>,
}

impl ForwardScales {
    pub fn simulate(y_history: &[f64], n: usize, params: &ModelParams<f64>, n_real: usize, seed: u64) -> Result<Self> {
        let m = params.m;
        if y_history.len() != m {
            return domain(format!("expected {m} de-modulated values, got {}", y_history.len()));
        }
        if n < 1 || n_real < 1 {
            return domain("need at least one step and one realization");
        }
        if y_history.iter().any(|v| !v.is_finite()) {
            return domain("history contains non-finite values");
        }
        let sampler = ResidualSampler::new(params.alpha, m)?;
        let b2 = params.beta * params.beta;
        let base: f64 = y_history.iter().map(|y| y * y).sum();
        let mut scales = vec![Vec::with_capacity(n_real); n];
        for r in 0..n_real {
            let path = if n > 1 {
                continue_y(params, &sampler, y_history, n - 1, derive_seed(seed, STREAM_FORWARD, r as u64))
            } else {
                Vec::new()
            };
            let mut window: Vec<f64> = y_history.to_vec();
            window.extend_from_slice(&path);
            let mut ss = base;
            scales[0].push((b2 + ss).sqrt());
            for k in 1..n {
                ss += window[m + k - 1].powi(2) - window[k - 1].powi(2);
                // Refresh to keep the running sum from drifting.
                if k % 64 == 0 {
                    ss = window[k..m + k].iter().map(|y| y * y).sum();
                }
                scales[k].push((b2 + ss.max(0.0)).sqrt());
            }
        }
        Ok(ForwardScales { shape: params.alpha + m as f64, scales })
    }

    pub fn steps(&self) -> usize {
        self.scales.len()
    }

    pub fn n_real(&self) -> usize {
        self.scales.first().map_or(0, Vec::len)
    }
}

/// Forward-propagated posterior at `t = t0 + steps` from `M` de-modulated
/// values ending at `t0 - 1`; `steps = 0` is the closed form itself.
pub fn propagate_rho_hat(
    history_y: &[f64],
    steps: usize,
    params: &ModelParams<f64>,
    n_real: usize,
    seed: u64,
) -> Result<MixtureDensity> {
    let n_real = if steps == 0 { 1 } else { n_real };
    let fwd = ForwardScales::simulate(history_y, steps + 1, params, n_real, seed)?;
    let shape = fwd.shape;
    let components = fwd.scales[steps].iter().map(|&scale| MixtureComponent::InverseGamma { shape, scale }).collect();
    MixtureDensity::new(
        components,
        vec![1.0; n_real],
        MixtureProvenance { t0: 0, t_end: steps, path_id: None, n_realizations: n_real },
    )
}

/// `y_t = x_t / a(i_t)` over the history window.
pub fn demodulate(x: &[f64], states: &[u64], d: f64) -> Result<Vec<f64>> {
    if x.len() != states.len() {
        return domain(format!("{} returns but {} states", x.len(), states.len()));
    }
    Ok(x.iter().zip(states).map(|(v, &i)| v / a_squared(i as f64, d).sqrt()).collect())
}

/// Mixing density `rho_bar = sum_t a^2(i_t) rho_hat_t / sum_t a^2(i_t)` over
/// `t = t0 .. t_end`.
///
/// `x_history` holds `x_{t0-M}, ..., x_{t0-1}` and `path` covers
/// `[t0 - M, t_end]`.
#[allow(clippy::too_many_arguments)]
pub fn build_rho_bar(
    x_history: &[f64],
    path: &RestartPath,
    t0: usize,
    t_end: usize,
    params: &ModelParams<f64>,
    prior: VolatilityPrior,
    n_real: usize,
    seed: u64,
) -> Result<MixtureDensity> {
    let m = params.m;
    if t_end < t0 || t0 < m {
        return domain(format!("invalid horizon t0 = {t0}, T = {t_end} for M = {m}"));
    }
    if path.t_start != t0 - m || path.t_end() != t_end {
        return domain(format!(
            "restart path covers [{}, {}], need [{}, {t_end}]",
            path.t_start,
            path.t_end(),
            t0 - m
        ));
    }
    if x_history.len() != m {
        return domain(format!("history has {} returns, need {m}", x_history.len()));
    }
    let provenance = MixtureProvenance { t0, t_end, path_id: None, n_realizations: n_real };
    if let VolatilityPrior::PointMass(sigma) = prior {
        if !(sigma > 0.0) {
            return domain("point-mass volatility must be positive");
        }
        return Ok(MixtureDensity::single(MixtureComponent::PointMass { sigma }, provenance));
    }
    let y = demodulate(x_history, &path.states[..m], params.d)?;
    let n = t_end - t0 + 1;
    let fwd = ForwardScales::simulate(&y, n, params, n_real, seed)?;
    let mut components = Vec::with_capacity(n * n_real);
    let mut weights = Vec::with_capacity(n * n_real);
    for (k, row) in fwd.scales.iter().enumerate() {
        let a2 = a_squared(path.states[m + k] as f64, params.d);
        for &scale in row {
            components.push(MixtureComponent::InverseGamma { shape: fwd.shape, scale });
            weights.push(a2);
        }
    }
    MixtureDensity::new(components, weights, provenance)
}
