use std::collections::HashMap;
use std::io::Write;
use std::sync::Mutex;

use rand::Rng;
use rayon::prelude::*;

use super::config::InferenceConfig;
use super::window::{log_sum_exp, StateLaw, WindowModel};
use crate::error::{domain, Error, Result};
use crate::model::{ModelParams, RestartPath, ReturnSeries};
use crate::rng::{stream_rng, STREAM_POSTERIOR};

/// Local-window posterior of the restart string `i_{t0-M}, ..., i_{t0-1}`.
///
/// The first state is drawn from its marginal given the `2 tau + 1`
/// returns centred on it; every later state is drawn given up to `tau`
/// preceding states and the returns within `tau` steps, clipped at `t0 - 1`.
/// Time indices are 1-based: `x_t` is `history.returns()[t - 1]`.
pub struct PastPosterior {
    t0: usize,
    m: usize,
    tau: usize,
    n_mc: usize,
    first_window: WindowModel,
    first_law: StateLaw,
    /// Window for step `t` at index `t - (t0 - M + 1)`.
    step_windows: Vec<(usize, WindowModel)>,
    cache: Mutex<HashMap<(usize, Vec<u64>), f64>>,
}

impl PastPosterior {
    pub fn new(history: &[f64], t0: usize, params: &ModelParams<f64>, cfg: &InferenceConfig) -> Result<Self> {
        params.validate()?;
        cfg.validate(params)?;
        let (m, tau) = (params.m, cfg.tau);
        if 2 * tau + 1 > m + 1 {
            return domain(format!("window 2 tau + 1 = {} exceeds M + 1 = {}", 2 * tau + 1, m + 1));
        }
        if t0 < m + tau + 1 {
            return domain(format!("pricing step {t0} needs at least M + tau = {} prior returns", m + tau));
        }
        if history.len() < t0 - 1 {
            return domain(format!("history has {} returns, pricing step {t0} needs {}", history.len(), t0 - 1));
        }
        let x = |lo: usize, hi: usize| &history[lo - 1..hi];
        let start = t0 - m;
        let first_window = WindowModel::from_config(x(start - tau, start + tau), params, cfg)?;
        let first_law = first_window.state_law(tau)?;
        if !first_law.ln_total().is_finite() {
            return Err(Error::Numeric("first-state posterior has no mass".into()));
        }
        let mut step_windows = Vec::with_capacity(m - 1);
        for t in start + 1..t0 {
            let lo = t - tau;
            let hi = (t + tau).min(t0 - 1);
            step_windows.push((lo, WindowModel::from_config(x(lo, hi), params, cfg)?));
        }
        Ok(PastPosterior {
            t0,
            m,
            tau,
            n_mc: cfg.n_mc,
            first_window,
            first_law,
            step_windows,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn t_start(&self) -> usize {
        self.t0 - self.m
    }

    /// Posterior probability of `i_{t0-M} = k` (exact range only).
    pub fn first_state_probability(&self, k: u64) -> f64 {
        self.first_law.probability(k)
    }

    /// Probability of a restart at `t` given the states
    /// `i_{max(t - tau, t0 - M)}, ..., i_{t-1}` in `previous`.
    pub fn restart_probability(&self, t: usize, previous: &[u64]) -> Result<f64> {
        let start = self.t_start();
        if t <= start || t >= self.t0 {
            return domain(format!("step {t} outside ({start}, {})", self.t0));
        }
        let from = (t - self.tau).max(start);
        if previous.len() != t - from {
            return domain(format!("step {t} conditions on {} states, got {}", t - from, previous.len()));
        }
        let key = (t, previous.to_vec());
        if let Some(&p) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(p);
        }
        let (lo, window) = &self.step_windows[t - start - 1];
        let mut fixed = vec![None; window.len()];
        for (k, &s) in previous.iter().enumerate() {
            fixed[from + k - lo] = Some(s);
        }
        let prev = *previous.last().expect("at least one previous state");
        fixed[t - lo] = Some(1);
        let ln_restart = window.ln_marginal(&fixed)?;
        fixed[t - lo] = Some(prev + 1);
        let ln_cont = window.ln_marginal(&fixed)?;
        let ln_total = log_sum_exp(&[ln_restart, ln_cont]);
        if !ln_total.is_finite() {
            return Err(Error::Numeric(format!("no posterior mass for the state at step {t}")));
        }
        let p = (ln_restart - ln_total).exp();
        self.cache.lock().expect("cache lock").insert(key, p);
        Ok(p)
    }

    fn sample_one(&self, seed: u64, idx: usize) -> Result<RestartPath> {
        let mut rng = stream_rng(seed, STREAM_POSTERIOR, idx as u64);
        let (first, mut weight) = self.first_law.sample(&self.first_window, &mut rng);
        let start = self.t_start();
        let mut states = Vec::with_capacity(self.m);
        states.push(first);
        for t in start + 1..self.t0 {
            let from = (t - self.tau).max(start);
            let p = self.restart_probability(t, &states[from - start..])?;
            let prev = *states.last().expect("non-empty");
            if rng.random::<f64>() < p {
                states.push(1);
                weight *= p;
            } else {
                states.push(prev + 1);
                weight *= 1.0 - p;
            }
        }
        RestartPath::new(start, states, weight.clamp(0.0, 1.0))
    }

    /// Draw `n` independent strings; sample `k` uses its own split stream.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<RestartPath>> {
        (0..n).into_par_iter().map(|k| self.sample_one(seed, k)).collect()
    }

    /// Draw the configured `n_mc` strings.
    pub fn sample_configured(&self, seed: u64) -> Result<Vec<RestartPath>> {
        self.sample(self.n_mc, seed)
    }
}

/// Sample `cfg.n_mc` past restart strings covering `[t0 - M, t0 - 1]`.
pub fn sample_past_restarts(
    history: &ReturnSeries,
    t0: usize,
    params: &ModelParams<f64>,
    cfg: &InferenceConfig,
    seed: u64,
) -> Result<Vec<RestartPath>> {
    PastPosterior::new(history.returns(), t0, params, cfg)?.sample_configured(seed)
}

/// Debug dump in the `sample_idx,t,i_state,weight` layout.
pub fn write_restart_samples<W: Write>(paths: &[RestartPath], mut w: W) -> Result<()> {
    writeln!(w, "sample_idx,t,i_state,weight")?;
    for (idx, path) in paths.iter().enumerate() {
        for (k, s) in path.states.iter().enumerate() {
            writeln!(w, "{idx},{},{s},{}", path.t_start + k, path.weight)?;
        }
    }
    Ok(())
}
