//! Price evaluation: past restart strings sampled from the local posterior,
//! future strings with at most two (optionally three) restarts, and the
//! volatility mixture built from forward-simulated de-modulated returns.
//!
//! For a past string and future scenario with `Lambda = sum_t a^2(i_t)`, the
//! price is `sum_t a^2(i_t) H_t(Lambda) / Lambda`, where `H_t(Lambda)` is the
//! call price at `sigma_tilde = sigma sqrt(Lambda)` averaged over the step-`t`
//! posterior of `sigma`. `H_t` is tabulated on a few `Lambda` nodes and the
//! scenario sums are assembled from per-run prefix tables, so the cost per
//! scenario does not grow with the horizon.

use rayon::prelude::*;

use super::closed_form::{call_delta_from_sigma_tilde, call_price_from_sigma_tilde, ContractSpec};
use crate::error::{domain, Error, Result};
use crate::inference::{enumerate_future_scenarios, InferenceConfig, PastPosterior};
use crate::mixture::{demodulate, ForwardScales, VolatilityPrior};
use crate::model::{a_squared, ModelParams, RestartPath, ReturnSeries};
use crate::nodes::{discrete_gauss, log_gamma_rule, Chebyshev, Rule};

#[derive(Debug, Clone, PartialEq)]
pub struct PricingConfig {
    pub inference: InferenceConfig,
    /// Forward realizations per mixture.
    pub n_real: usize,
    pub prior: VolatilityPrior,
    /// Chebyshev nodes in `ln Lambda` when scenarios have more distinct
    /// `Lambda` values than this.
    pub lambda_nodes: usize,
    /// Step multiplier of the quadrature over each inverse-Gamma component.
    pub sigma_rule_step: f64,
    /// Gauss nodes in `ln sigma` replacing the per-step mixture of all
    /// realizations and quadrature nodes; `0` keeps every atom.
    pub sigma_nodes: usize,
}

impl Default for PricingConfig {
    fn default() -> Self {
        PricingConfig {
            inference: InferenceConfig::default(),
            n_real: 100,
            prior: VolatilityPrior::InverseGamma,
            lambda_nodes: 12,
            sigma_rule_step: 1.0,
            sigma_nodes: 24,
        }
    }
}

/// Distribution of the root-mean-square effective volatility over the
/// sampled past strings and future scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SigmaTildeStats {
    pub mean: f64,
    pub std: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceResult {
    pub price: f64,
    pub delta: f64,
    pub sigma_tilde_stats: SigmaTildeStats,
    /// Future scenarios per past string.
    pub n_scenarios: usize,
    pub n_mc: usize,
}

/// Identical sampled past strings share all downstream work.
#[derive(Debug, Clone)]
pub struct PastGroup {
    pub states: Vec<u64>,
    pub count: usize,
    /// `None` under a point-mass prior.
    pub scales: Option<ForwardScales>,
    /// `<sigma^2>` of the step posterior, per future step.
    second_moments: Vec<f64>,
    /// Quadrature in `sigma` for the step posterior, per future step.
    sigma_rules: Vec<Rule>,
}

/// Past samples and forward simulations for one pricing step, reusable
/// across strikes and maturities up to `max_steps`.
#[derive(Debug, Clone)]
pub struct PreparedPricer {
    t0: usize,
    max_steps: usize,
    params: ModelParams<f64>,
    cfg: PricingConfig,
    n_mc: usize,
    groups: Vec<PastGroup>,
}

struct GroupValue {
    price: f64,
    delta: f64,
    sigmas: Vec<(f64, f64)>,
    n_scenarios: usize,
}

impl PreparedPricer {
    /// Sample past strings from the local posterior and simulate forward.
    /// `history` holds `x_1, x_2, ...` with at least `t0 - 1` values.
    pub fn new(
        history: &[f64],
        t0: usize,
        params: &ModelParams<f64>,
        cfg: &PricingConfig,
        max_steps: usize,
        seed: u64,
    ) -> Result<Self> {
        let posterior = PastPosterior::new(history, t0, params, &cfg.inference)?;
        let paths = posterior.sample(cfg.inference.n_mc, seed)?;
        Self::from_paths(history, t0, params, cfg, &paths, max_steps, seed)
    }

    /// Use the given past strings, each covering `[t0 - M, t0 - 1]`.
    pub fn from_paths(
        history: &[f64],
        t0: usize,
        params: &ModelParams<f64>,
        cfg: &PricingConfig,
        paths: &[RestartPath],
        max_steps: usize,
        seed: u64,
    ) -> Result<Self> {
        params.validate()?;
        let m = params.m;
        if paths.is_empty() {
            return Err(Error::Numeric("no past restart samples".into()));
        }
        if max_steps < 1 || cfg.n_real < 1 || cfg.lambda_nodes < 2 {
            return domain("need max_steps >= 1, n_real >= 1 and lambda_nodes >= 2");
        }
        if t0 <= m || history.len() < t0 - 1 {
            return domain(format!("history of {} returns does not cover [{}, {}]", history.len(), t0 - m, t0 - 1));
        }
        let x_hist = &history[t0 - m - 1..t0 - 1];
        let mut groups: Vec<PastGroup> = Vec::new();
        for path in paths {
            if path.t_start != t0 - m || path.states.len() != m {
                return domain(format!("past string must cover [{}, {}]", t0 - m, t0 - 1));
            }
            match groups.iter_mut().find(|g| g.states == path.states) {
                Some(g) => g.count += 1,
                None => groups.push(PastGroup {
                    states: path.states.clone(),
                    count: 1,
                    scales: None,
                    second_moments: Vec::new(),
                    sigma_rules: Vec::new(),
                }),
            }
        }
        let shape = params.alpha + m as f64;
        let rule = log_gamma_rule(shape / 2.0, cfg.sigma_rule_step);
        let mut sigma_rule: Vec<(f64, f64)> = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .filter(|(_, &w)| w > 1e-17)
            .map(|(&g, &w)| (1.0 / (2.0 * g).sqrt(), w))
            .collect();
        let total: f64 = sigma_rule.iter().map(|p| p.1).sum();
        sigma_rule.iter_mut().for_each(|p| p.1 /= total);
        groups
            .par_iter_mut()
            .map(|g| -> Result<()> {
                match cfg.prior {
                    VolatilityPrior::PointMass(sigma) => {
                        if !(sigma > 0.0) {
                            return domain("point-mass volatility must be positive");
                        }
                        g.second_moments = vec![sigma * sigma; max_steps];
                    }
                    VolatilityPrior::InverseGamma => {
                        let y = demodulate(x_hist, &g.states, params.d)?;
                        let fwd = ForwardScales::simulate(&y, max_steps, params, cfg.n_real, seed)?;
                        let denom = fwd.shape - 2.0;
                        g.second_moments = fwd
                            .scales
                            .iter()
                            .map(|row| {
                                let mean_s2 = row.iter().map(|s| s * s).sum::<f64>() / row.len() as f64;
                                if denom > 0.0 { mean_s2 / denom } else { f64::INFINITY }
                            })
                            .collect();
                        g.sigma_rules = fwd.scales.iter().map(|row| step_sigma_rule(row, &sigma_rule, cfg.sigma_nodes)).collect();
                        g.scales = Some(fwd);
                    }
                }
                Ok(())
            })
            .collect::<Result<Vec<()>>>()?;
        Ok(PreparedPricer {
            t0,
            max_steps,
            params: *params,
            cfg: cfg.clone(),
            n_mc: paths.len(),
            groups,
        })
    }

    pub fn t0(&self) -> usize {
        self.t0
    }

    pub fn groups(&self) -> &[PastGroup] {
        &self.groups
    }

    pub fn n_mc(&self) -> usize {
        self.n_mc
    }

    /// Price with the configured number of future restarts.
    pub fn price(&self, strike: f64, maturity: usize, s_prev: f64) -> Result<PriceResult> {
        self.price_with_order(strike, maturity, s_prev, self.cfg.inference.max_future_restarts)
    }

    pub fn price_with_order(&self, strike: f64, maturity: usize, s_prev: f64, max_restarts: usize) -> Result<PriceResult> {
        self.price_at_rate(strike, maturity, s_prev, self.params.r, max_restarts)
    }

    /// Price with a per-step rate other than the one in the parameters.
    /// Nothing prepared depends on the rate.
    pub fn price_at_rate(&self, strike: f64, maturity: usize, s_prev: f64, r: f64, max_restarts: usize) -> Result<PriceResult> {
        if !(r >= 0.0) || !r.is_finite() {
            return domain(format!("rate must be non-negative, got {r}"));
        }
        let contract = ContractSpec::new(strike, self.t0, maturity, s_prev)?;
        if contract.steps() > self.max_steps {
            return domain(format!("maturity needs {} steps, prepared for {}", contract.steps(), self.max_steps));
        }
        let values: Vec<GroupValue> = self
            .groups
            .par_iter()
            .map(|g| self.group_value(g, &contract, r, max_restarts))
            .collect::<Result<_>>()?;
        let n = self.n_mc as f64;
        let mut price = 0.0;
        let mut delta = 0.0;
        let mut sigmas = Vec::new();
        for (g, v) in self.groups.iter().zip(&values) {
            let share = g.count as f64 / n;
            price += share * v.price;
            delta += share * v.delta;
            sigmas.extend(v.sigmas.iter().map(|&(w, s)| (w * share, s)));
        }
        if !price.is_finite() {
            return Err(Error::Numeric(format!("non-finite price for strike {strike}")));
        }
        Ok(PriceResult {
            price,
            delta,
            sigma_tilde_stats: weighted_stats(&mut sigmas),
            n_scenarios: values.first().map_or(0, |v| v.n_scenarios),
            n_mc: self.n_mc,
        })
    }

    fn group_value(&self, g: &PastGroup, contract: &ContractSpec, r: f64, max_restarts: usize) -> Result<GroupValue> {
        let n = contract.steps();
        let d = self.params.d;
        let i_prev = *g.states.last().expect("non-empty past string");
        let set = enumerate_future_scenarios(i_prev, self.t0, contract.maturity, self.params.nu, max_restarts)?;
        let cont: Vec<f64> = (0..n).map(|k| a_squared((i_prev + 1 + k as u64) as f64, d)).collect();
        let fresh: Vec<f64> = (0..n).map(|k| a_squared((k + 1) as f64, d)).collect();
        let restarts: Vec<Vec<usize>> =
            set.scenarios.iter().map(|s| s.restart_times.iter().map(|t| t - self.t0).collect()).collect();

        // Lambda per scenario from prefix sums of a^2.
        let ones = vec![1.0; n];
        let lambdas = segment_sums(&restarts, &cont, &fresh, &ones);

        // Interpolation nodes in Lambda and the basis weights per scenario.
        let mut distinct = lambdas.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
        // Dense row-major basis weights, one row per scenario.
        let (nodes, basis): (Vec<f64>, Vec<f64>) = if distinct.len() <= self.cfg.lambda_nodes {
            let g_count = distinct.len();
            let mut basis = vec![0.0; lambdas.len() * g_count];
            for (sc, l) in lambdas.iter().enumerate() {
                let idx = distinct.partition_point(|v| *v < *l * (1.0 - 1e-12));
                basis[sc * g_count + idx.min(g_count - 1)] = 1.0;
            }
            (distinct, basis)
        } else {
            let lo = distinct[0].ln();
            let hi = distinct[distinct.len() - 1].ln();
            let cheb = Chebyshev::new(lo, hi, self.cfg.lambda_nodes);
            let g_count = self.cfg.lambda_nodes;
            let mut basis = vec![0.0; lambdas.len() * g_count];
            for (sc, l) in lambdas.iter().enumerate() {
                for (gi, w) in cheb.basis(l.ln()) {
                    basis[sc * g_count + gi] = w;
                }
            }
            (cheb.points().iter().map(|p| p.exp()).collect(), basis)
        };

        // H_t at every node, for price and delta.
        let g_count = nodes.len();
        let sqrt_nodes: Vec<f64> = nodes.iter().map(|v| v.sqrt()).collect();
        let (s, k_strike) = (contract.s_prev, contract.strike);
        let mut h_price = vec![vec![0.0; n]; g_count];
        let mut h_delta = vec![vec![0.0; n]; g_count];
        match (&g.scales, self.cfg.prior) {
            (_, VolatilityPrior::PointMass(sigma)) => {
                for (gi, sq) in sqrt_nodes.iter().enumerate() {
                    let p = call_price_from_sigma_tilde(s, k_strike, n, r, sigma * sq);
                    let dl = call_delta_from_sigma_tilde(s, k_strike, n, r, sigma * sq);
                    h_price[gi].iter_mut().for_each(|v| *v = p);
                    h_delta[gi].iter_mut().for_each(|v| *v = dl);
                }
            }
            (Some(_), VolatilityPrior::InverseGamma) => {
                for (k, rule) in g.sigma_rules[..n].iter().enumerate() {
                    for gi in 0..g_count {
                        let (mut p, mut dl) = (0.0, 0.0);
                        for (&sigma, &w) in rule.nodes.iter().zip(&rule.weights) {
                            let v = sigma * sqrt_nodes[gi];
                            p += w * call_price_from_sigma_tilde(s, k_strike, n, r, v);
                            dl += w * call_delta_from_sigma_tilde(s, k_strike, n, r, v);
                        }
                        h_price[gi][k] = p;
                        h_delta[gi][k] = dl;
                    }
                }
            }
            (None, VolatilityPrior::InverseGamma) => return Err(Error::Numeric("missing forward simulation".into())),
        }

        let mut price = vec![0.0; lambdas.len()];
        let mut delta = vec![0.0; lambdas.len()];
        for gi in 0..g_count {
            let vp = segment_sums(&restarts, &cont, &fresh, &h_price[gi]);
            let vd = segment_sums(&restarts, &cont, &fresh, &h_delta[gi]);
            for sc in 0..lambdas.len() {
                let w = basis[sc * g_count + gi] / lambdas[sc];
                price[sc] += w * vp[sc];
                delta[sc] += w * vd[sc];
            }
        }
        let var = segment_sums(&restarts, &cont, &fresh, &g.second_moments[..n]);

        let a = set.normalization;
        let mut total_p = 0.0;
        let mut total_d = 0.0;
        let mut sigmas = Vec::with_capacity(lambdas.len());
        for (sc, scen) in set.scenarios.iter().enumerate() {
            let w = scen.weight / a;
            total_p += w * price[sc];
            total_d += w * delta[sc];
            sigmas.push((w, var[sc].sqrt()));
        }
        Ok(GroupValue { price: total_p, delta: total_d, sigmas, n_scenarios: set.scenarios.len() })
    }
}

/// Quadrature for the step posterior of `sigma`: the equal-weight mixture
/// over realizations of the inverse-Gamma law with each scale. `unit` holds
/// `(u, w)` with `sigma = scale * u` for a unit-scale law.
fn step_sigma_rule(scales: &[f64], unit: &[(f64, f64)], n_nodes: usize) -> Rule {
    let uniform = scales.iter().all(|v| *v == scales[0]);
    let scales: &[f64] = if uniform { &scales[..1] } else { scales };
    let per = 1.0 / scales.len() as f64;
    let mut ln_sigma = Vec::with_capacity(scales.len() * unit.len());
    let mut weights = Vec::with_capacity(ln_sigma.capacity());
    for &scale in scales {
        for &(u, w) in unit {
            ln_sigma.push((scale * u).ln());
            weights.push(w * per);
        }
    }
    let rule = if n_nodes == 0 { Rule { nodes: ln_sigma, weights } } else { discrete_gauss(&ln_sigma, &weights, n_nodes) };
    Rule { nodes: rule.nodes.iter().map(|z| z.exp()).collect(), weights: rule.weights }
}

/// `sum_t a^2(i_t) c_t` for every scenario, where `i_t` continues from the
/// past string (`cont`) until the first restart and counts up from one
/// (`fresh`) after each restart. Restart offsets are relative to `t0`.
fn segment_sums(restarts: &[Vec<usize>], cont: &[f64], fresh: &[f64], c: &[f64]) -> Vec<f64> {
    let n = c.len();
    let mut prefix = vec![0.0; n + 1];
    for k in 0..n {
        prefix[k + 1] = prefix[k] + cont[k] * c[k];
    }
    let needs_table = restarts.iter().any(|r| !r.is_empty());
    let stride = n + 1;
    let mut table = Vec::new();
    if needs_table {
        table = vec![0.0; n * stride];
        for j in 0..n {
            let row = &mut table[j * stride..(j + 1) * stride];
            for k in j..n {
                row[k + 1] = row[k] + fresh[k - j] * c[k];
            }
        }
    }
    restarts
        .iter()
        .map(|times| {
            let Some(&first) = times.first() else {
                return prefix[n];
            };
            let mut v = prefix[first];
            for (idx, &j) in times.iter().enumerate() {
                let end = times.get(idx + 1).copied().unwrap_or(n);
                v += table[j * stride + end];
            }
            v
        })
        .collect()
}

fn weighted_stats(values: &mut [(f64, f64)]) -> SigmaTildeStats {
    let total: f64 = values.iter().map(|v| v.0).sum();
    if values.is_empty() || !(total > 0.0) {
        return SigmaTildeStats::default();
    }
    let mean = values.iter().map(|(w, s)| w * s).sum::<f64>() / total;
    let var = values.iter().map(|(w, s)| w * (s - mean).powi(2)).sum::<f64>() / total;
    values.sort_by(|a, b| a.1.total_cmp(&b.1));
    let quantile = |q: f64| {
        let mut acc = 0.0;
        for &(w, s) in values.iter() {
            acc += w / total;
            if acc >= q {
                return s;
            }
        }
        values[values.len() - 1].1
    };
    SigmaTildeStats { mean, std: var.max(0.0).sqrt(), q05: quantile(0.05), q50: quantile(0.5), q95: quantile(0.95) }
}

/// Price one contract from scratch. `history` must contain the returns
/// `x_1, ..., x_{t0-1}`.
pub fn price_option(
    contract: &ContractSpec,
    history: &ReturnSeries,
    params: &ModelParams<f64>,
    cfg: &PricingConfig,
    seed: u64,
) -> Result<PriceResult> {
    contract.validate()?;
    PreparedPricer::new(history.returns(), contract.t0, params, cfg, contract.steps(), seed)?.price(
        contract.strike,
        contract.maturity,
        contract.s_prev,
    )
}
