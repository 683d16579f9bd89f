use crate::error::{domain, Result};

/// A restart scenario between the pricing step and maturity.
#[derive(Debug, Clone, PartialEq)]
pub struct FutureRestartScenario {
    /// Number of restarts in `[t0, T]`.
    pub order: usize,
    pub restart_times: Vec<usize>,
    /// `nu^order (1 - nu)^{n - order}` with `n = T - t0 + 1`.
    pub weight: f64,
    i_prev: u64,
    t0: usize,
    t_end: usize,
}

impl FutureRestartScenario {
    /// States `i_{t0}, ..., i_T`.
    pub fn states(&self) -> Vec<u64> {
        let mut s = self.i_prev;
        (self.t0..=self.t_end)
            .map(|t| {
                s = if self.restart_times.contains(&t) { 1 } else { s + 1 };
                s
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    pub scenarios: Vec<FutureRestartScenario>,
    /// Sum of the included weights.
    pub normalization: f64,
}

/// All restart strings on `[t0, t_end]` with at most `max_restarts`
/// restarts, continuing from state `i_prev` at `t0 - 1`.
pub fn enumerate_future_scenarios(
    i_prev: u64,
    t0: usize,
    t_end: usize,
    nu: f64,
    max_restarts: usize,
) -> Result<ScenarioSet> {
    if t_end < t0 {
        return domain(format!("maturity {t_end} precedes pricing step {t0}"));
    }
    if i_prev < 1 {
        return domain("previous state must be at least 1");
    }
    if !(nu > 0.0 && nu <= 1.0) {
        return domain(format!("nu must lie in (0, 1], got {nu}"));
    }
    let n = t_end - t0 + 1;
    let mut scenarios = Vec::new();
    let mut times = Vec::new();
    collect(i_prev, t0, n, nu, max_restarts, 0, &mut times, &mut scenarios);
    scenarios.sort_by(|a, b| a.order.cmp(&b.order).then_with(|| a.restart_times.cmp(&b.restart_times)));
    let normalization = scenarios.iter().map(|s| s.weight).sum();
    Ok(ScenarioSet { scenarios, normalization })
}

#[allow(clippy::too_many_arguments)]
fn collect(
    i_prev: u64,
    t0: usize,
    n: usize,
    nu: f64,
    max_restarts: usize,
    from: usize,
    times: &mut Vec<usize>,
    out: &mut Vec<FutureRestartScenario>,
) {
    let k = times.len();
    let weight = nu.powi(k as i32) * (1.0 - nu).powi((n - k) as i32);
    out.push(FutureRestartScenario { order: k, restart_times: times.clone(), weight, i_prev, t0, t_end: t0 + n - 1 });
    if k == max_restarts {
        return;
    }
    for j in from..n {
        times.push(t0 + j);
        collect(i_prev, t0, n, nu, max_restarts, j + 1, times, out);
        times.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_normalization() {
        let set = enumerate_future_scenarios(10, 5, 7, 0.5, 2).unwrap();
        assert_eq!(set.scenarios.len(), 1 + 3 + 3);
        assert!((set.normalization - 0.875).abs() < 1e-15);
        let set = enumerate_future_scenarios(10, 1, 5, 0.1, 2).unwrap();
        assert_eq!(set.scenarios.len(), 16);
        let one = enumerate_future_scenarios(4, 3, 3, 0.3, 2).unwrap();
        assert_eq!(one.scenarios.len(), 2);
        assert!((one.normalization - 1.0).abs() < 1e-15);
        let third = enumerate_future_scenarios(1, 1, 5, 0.1, 3).unwrap();
        assert_eq!(third.scenarios.len(), 1 + 5 + 10 + 10);
    }

    #[test]
    fn states_follow_restarts() {
        let set = enumerate_future_scenarios(7, 10, 13, 0.01, 2).unwrap();
        let s = set.scenarios.iter().find(|s| s.restart_times == vec![11, 13]).unwrap();
        assert_eq!(s.states(), vec![8, 1, 2, 1]);
        assert_eq!(set.scenarios[0].states(), vec![8, 9, 10, 11]);
        assert!(enumerate_future_scenarios(7, 10, 9, 0.01, 2).is_err());
    }
}
