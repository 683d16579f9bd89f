//! Joint density of returns and restart states on a short window, with any
//! subset of the states held fixed and the rest summed out.
//!
//! A window of `L` returns is treated as the first `L` steps of the process:
//! the first state is drawn from the geometric initial law and `phi_L` is the
//! exact joint density of the de-modulated returns, which requires
//! `L <= M + 1`. A state string is a restart pattern over positions `2..L`
//! plus the unbounded first state `i_1`, so the marginal is a finite sum over
//! patterns of one-dimensional series in `i_1`.

use rand::Rng;

use super::config::{InferenceConfig, TailMode};
use crate::error::{domain, Result};
use crate::model::{a_squared, ModelParams};
use crate::quadrature::integrate;
use crate::scalar::Scalar;

/// Largest window handled by pattern enumeration.
const MAX_WINDOW: usize = 24;
/// Sub-interval width (in states) below which tail sampling enumerates.
const LEAF_WIDTH: f64 = 32.0;

#[derive(Debug, Clone)]
struct Pattern {
    /// Number of leading positions in the first run (states `i_1 + k`).
    first_len: usize,
    /// `i_1` when a fixed state inside the first run determines it.
    pin: Option<u64>,
    /// Chain weight of the restart choices plus `-1/2 sum ln a^2` over the
    /// positions after the first run.
    ln_const: f64,
    /// `sum x^2 / a^2` over the positions after the first run.
    rest_y2: f64,
    /// State at the queried position when it lies after the first run.
    value_at_query: Option<u64>,
}

/// Remainder of a series in `i_1` beyond the exact range, as an integral
/// over panels with half-integer bounds.
#[derive(Debug, Clone)]
struct Tail {
    shift: f64,
    panels: Vec<(f64, f64, f64)>,
    integral: f64,
    correction: f64,
}

impl Tail {
    fn ln_total(&self) -> f64 {
        self.shift + (self.integral + self.correction).max(self.integral * 0.5).ln()
    }
}

/// Posterior law of the state at one window position with all other
/// states summed out (unnormalized, log scale).
#[derive(Debug, Clone)]
pub struct StateLaw {
    position: usize,
    /// `ln w(k)` for `k = 1..=ln_exact.len()`.
    ln_exact: Vec<f64>,
    tail_patterns: Vec<Pattern>,
    tail: Option<Tail>,
    ln_total: f64,
}

impl StateLaw {
    pub fn ln_total(&self) -> f64 {
        self.ln_total
    }

    /// Normalized probability of state `k` within the exact range.
    pub fn probability(&self, k: u64) -> f64 {
        match self.ln_exact.get((k as usize).wrapping_sub(1)) {
            Some(&l) => (l - self.ln_total).exp(),
            None => 0.0,
        }
    }

    /// Probability mass assigned beyond the exact range.
    pub fn tail_mass(&self) -> f64 {
        self.tail.as_ref().map_or(0.0, |t| (t.ln_total() - self.ln_total).exp())
    }

    /// Draw a state and return it with its (approximate) probability.
    pub fn sample<R: Rng + ?Sized>(&self, window: &WindowModel, rng: &mut R) -> (u64, f64) {
        let mut u: f64 = rng.random();
        for (idx, &l) in self.ln_exact.iter().enumerate() {
            let p = (l - self.ln_total).exp();
            if u < p {
                return (idx as u64 + 1, p);
            }
            u -= p;
        }
        let Some(tail) = &self.tail else {
            // Round-off left a sliver of mass: take the most likely exact state.
            let best = argmax(&self.ln_exact);
            return (best as u64 + 1, (self.ln_exact[best] - self.ln_total).exp());
        };
        let q = self.position as f64;
        let f = |i1: f64| window.ln_series_term(&self.tail_patterns, i1) - tail.shift;
        let total: f64 = tail.panels.iter().map(|p| p.2).sum();
        let mut pick = rng.random::<f64>() * total;
        let mut chosen = *tail.panels.last().expect("non-empty tail");
        for p in &tail.panels {
            if pick < p.2 {
                chosen = *p;
                break;
            }
            pick -= p.2;
        }
        let (mut lo, mut hi) = (chosen.0, chosen.1);
        while hi - lo > LEAF_WIDTH {
            let mid = lo + ((hi - lo) / 2.0).floor();
            let left = integrate(|v| f(v).exp(), lo, mid, 0.0, 1e-9).value;
            let right = integrate(|v| f(v).exp(), mid, hi, 0.0, 1e-9).value;
            if rng.random::<f64>() * (left + right) < left {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let first = (lo + 0.5) as u64;
        let last = (hi - 0.5) as u64;
        let ln_w: Vec<f64> = (first..=last).map(|i| f(i as f64)).collect();
        let mx = ln_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = ln_w.iter().map(|l| (l - mx).exp()).collect();
        let sw: f64 = w.iter().sum();
        let mut pick = rng.random::<f64>() * sw;
        let mut k = last;
        for (j, &wj) in w.iter().enumerate() {
            if pick < wj {
                k = first + j as u64;
                break;
            }
            pick -= wj;
        }
        let ln_p = window.ln_series_term(&self.tail_patterns, k as f64) - self.ln_total;
        (k + q as u64, ln_p.exp())
    }
}

fn argmax(v: &[f64]) -> usize {
    v.iter().enumerate().fold(0, |best, (i, &x)| if x > v[best] { i } else { best })
}

pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let mx = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !mx.is_finite() {
        return mx;
    }
    mx + terms.iter().map(|t| (t - mx).exp()).sum::<f64>().ln()
}

/// Window density engine for fixed returns and parameters.
#[derive(Debug, Clone)]
pub struct WindowModel {
    x2: Vec<f64>,
    d: f64,
    nu: f64,
    ln_nu: f64,
    ln_cont: f64,
    beta2: f64,
    half_shape: f64,
    ln_phi_const: f64,
    i_max: u64,
    tail: TailMode,
    a2_table: Vec<f64>,
}

impl WindowModel {
    pub fn new(x: &[f64], params: &ModelParams<f64>, i_max: u64, tail: TailMode) -> Result<Self> {
        params.validate()?;
        let l = x.len();
        if l == 0 {
            return domain("window is empty");
        }
        if l > params.m + 1 {
            return domain(format!("window of {l} returns exceeds M + 1 = {}", params.m + 1));
        }
        if l > MAX_WINDOW {
            return domain(format!("window of {l} returns is too long to enumerate"));
        }
        if i_max < 1 {
            return domain("i_max must be at least 1");
        }
        if x.iter().any(|v| !v.is_finite()) {
            return domain("window contains non-finite returns");
        }
        let (alpha, beta) = (params.alpha, params.beta);
        let lf = l as f64;
        let ln_phi_const = alpha * beta.ln() + Scalar::ln_gamma((alpha + lf) / 2.0)
            - 0.5 * lf * std::f64::consts::PI.ln()
            - Scalar::ln_gamma(alpha / 2.0);
        let table_len = i_max as usize + l + 1;
        let a2_table = (1..=table_len).map(|u| a_squared(u as f64, params.d)).collect();
        Ok(WindowModel {
            x2: x.iter().map(|v| v * v).collect(),
            d: params.d,
            nu: params.nu,
            ln_nu: params.nu.ln(),
            ln_cont: (-params.nu).ln_1p(),
            beta2: beta * beta,
            half_shape: (alpha + lf) / 2.0,
            ln_phi_const,
            i_max,
            tail,
            a2_table,
        })
    }

    pub fn from_config(x: &[f64], params: &ModelParams<f64>, cfg: &InferenceConfig) -> Result<Self> {
        Self::new(x, params, cfg.resolved_i_max(params), cfg.tail)
    }

    pub fn len(&self) -> usize {
        self.x2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x2.is_empty()
    }

    #[inline]
    fn a2_int(&self, u: u64) -> f64 {
        match self.a2_table.get((u as usize).wrapping_sub(1)) {
            Some(&v) => v,
            None => a_squared(u as f64, self.d),
        }
    }

    #[inline]
    fn a2_real(&self, u: f64) -> f64 {
        if u.fract() == 0.0 && u >= 1.0 {
            self.a2_int(u as u64)
        } else {
            a_squared(u, self.d)
        }
    }

    #[inline]
    fn ln_initial(&self, u: f64) -> f64 {
        if u == 1.0 {
            self.ln_nu
        } else {
            self.ln_nu + (u - 1.0) * self.ln_cont
        }
    }

    /// `ln f^{X,I}` of one pattern with first state `i1` (real for the tail).
    fn ln_pattern_term(&self, p: &Pattern, i1: f64) -> f64 {
        let mut ln_a = 0.0;
        let mut y2 = p.rest_y2;
        for k in 0..p.first_len {
            let a2 = self.a2_real(i1 + k as f64);
            ln_a += a2.ln();
            y2 += self.x2[k] / a2;
        }
        self.ln_initial(i1) + p.ln_const - 0.5 * ln_a + self.ln_phi_const - self.half_shape * (self.beta2 + y2).ln()
    }

    /// `ln sum_p f_p(i1)` over a set of patterns.
    fn ln_series_term(&self, ps: &[Pattern], i1: f64) -> f64 {
        if ps.len() == 1 {
            return self.ln_pattern_term(&ps[0], i1);
        }
        let terms: Vec<f64> = ps.iter().map(|p| self.ln_pattern_term(p, i1)).collect();
        log_sum_exp(&terms)
    }

    /// Restart patterns consistent with `fixed`; `query` marks a position
    /// whose state is reported when it falls after the first run.
    fn patterns(&self, fixed: &[Option<u64>], query: Option<usize>) -> Vec<Pattern> {
        let l = self.len();
        let mut out = Vec::new();
        'mask: for mask in 0u64..(1u64 << (l - 1)) {
            let restart = |p: usize| p > 0 && (mask >> (p - 1)) & 1 == 1;
            let first_len = (1..l).find(|&p| restart(p)).unwrap_or(l);
            let n_restart = mask.count_ones() as usize;
            let n_cont = l - 1 - n_restart;
            let mut ln_const = n_restart as f64 * self.ln_nu;
            if n_cont > 0 {
                ln_const += n_cont as f64 * self.ln_cont;
            }
            if ln_const == f64::NEG_INFINITY {
                continue;
            }
            let mut pin = None;
            let mut rest_y2 = 0.0;
            let mut run_start = 0;
            let mut value_at_query = None;
            for p in 0..l {
                if restart(p) {
                    run_start = p;
                }
                if p < first_len {
                    if let Some(v) = fixed[p] {
                        if v < p as u64 + 1 {
                            continue 'mask;
                        }
                        let c = v - p as u64;
                        if pin.is_some_and(|q| q != c) {
                            continue 'mask;
                        }
                        pin = Some(c);
                    }
                } else {
                    let s = (p - run_start + 1) as u64;
                    if fixed[p].is_some_and(|v| v != s) {
                        continue 'mask;
                    }
                    if query == Some(p) {
                        value_at_query = Some(s);
                    }
                    let a2 = self.a2_int(s);
                    ln_const -= 0.5 * a2.ln();
                    rest_y2 += self.x2[p] / a2;
                }
            }
            out.push(Pattern { first_len, pin, ln_const, rest_y2, value_at_query });
        }
        out
    }

    /// Remainder of `sum_{i1 > last} f(i1)` for the summed patterns.
    fn tail(&self, ps: &[Pattern], last: u64) -> Option<Tail> {
        if self.tail == TailMode::Truncate || ps.is_empty() || self.nu >= 1.0 {
            return None;
        }
        let start = last as f64 + 0.5;
        let f = |u: f64| self.ln_series_term(ps, u);
        let shift = f(start);
        if !shift.is_finite() {
            return None;
        }
        let cap = (2.0 / self.nu).round().max(16.0);
        let mut width = start.round().max(16.0).min(cap);
        let mut lo = start;
        let mut panels = Vec::new();
        let mut total = 0.0;
        for _ in 0..400 {
            let hi = lo + width;
            let mass = integrate(|u| (f(u) - shift).exp(), lo, hi, 0.0, 1e-11).value;
            panels.push((lo, hi, mass));
            total += mass;
            if mass <= 1e-17 * total && f(hi) <= f(lo) {
                break;
            }
            lo = hi;
            width = (2.0 * width).min(cap);
        }
        let h = 0.25;
        let deriv = ((f(start + h) - shift).exp() - (f(start - h) - shift).exp()) / (2.0 * h);
        Some(Tail { shift, panels, integral: total, correction: deriv / 24.0 })
    }

    /// `ln sum_{i1 >= 1} sum_p f_p(i1)` for patterns with a free first run.
    fn ln_free_series(&self, ps: &[Pattern]) -> f64 {
        if ps.is_empty() {
            return f64::NEG_INFINITY;
        }
        let mut terms: Vec<f64> = (1..=self.i_max).map(|i| self.ln_series_term(ps, i as f64)).collect();
        if let Some(t) = self.tail(ps, self.i_max) {
            terms.push(t.ln_total());
        }
        log_sum_exp(&terms)
    }

    /// Log of the joint density of the window returns and the fixed states,
    /// all other states summed out.
    pub fn ln_marginal(&self, fixed: &[Option<u64>]) -> Result<f64> {
        if fixed.len() != self.len() {
            return domain(format!("{} fixed slots for a window of {}", fixed.len(), self.len()));
        }
        let ps = self.patterns(fixed, None);
        let mut terms = Vec::with_capacity(ps.len() + 1);
        let mut free = Vec::new();
        for p in ps {
            match p.pin {
                Some(i1) => terms.push(self.ln_pattern_term(&p, i1 as f64)),
                None => free.push(p),
            }
        }
        terms.push(self.ln_free_series(&free));
        Ok(log_sum_exp(&terms))
    }

    /// Law of the state at `position` with every other state summed out.
    pub fn state_law(&self, position: usize) -> Result<StateLaw> {
        if position >= self.len() {
            return domain(format!("position {position} outside window of {}", self.len()));
        }
        let l = self.len();
        let n = self.i_max as usize;
        if n < position + 1 {
            return domain("i_max below the queried position");
        }
        let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); n];
        let mut covering = Vec::new();
        for p in self.patterns(&vec![None; l], Some(position)) {
            match p.value_at_query {
                Some(s) => buckets[s as usize - 1].push(self.ln_free_series(std::slice::from_ref(&p))),
                None => covering.push(p),
            }
        }
        // States covered by the first run: k = i1 + position.
        let q = position as u64;
        for k in (q + 1)..=(n as u64) {
            if !covering.is_empty() {
                buckets[k as usize - 1].push(self.ln_series_term(&covering, (k - q) as f64));
            }
        }
        let ln_exact: Vec<f64> = buckets.iter().map(|b| log_sum_exp(b)).collect();
        let tail = self.tail(&covering, n as u64 - q);
        let mut all = ln_exact.clone();
        if let Some(t) = &tail {
            all.push(t.ln_total());
        }
        let ln_total = log_sum_exp(&all);
        Ok(StateLaw { position, ln_exact, tail_patterns: covering, tail, ln_total })
    }
}

/// Log joint density `f^{X,I}` of a window of returns together with the
/// states given in `fixed` (`None` entries are summed out).
pub fn ln_joint_xi_density(
    x_window: &[f64],
    fixed: &[Option<u64>],
    params: &ModelParams<f64>,
    cfg: &InferenceConfig,
) -> Result<f64> {
    WindowModel::from_config(x_window, params, cfg)?.ln_marginal(fixed)
}

/// See [`ln_joint_xi_density`].
pub fn joint_xi_density(
    x_window: &[f64],
    fixed: &[Option<u64>],
    params: &ModelParams<f64>,
    cfg: &InferenceConfig,
) -> Result<f64> {
    Ok(ln_joint_xi_density(x_window, fixed, params, cfg)?.exp())
}
