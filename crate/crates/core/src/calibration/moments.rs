use crate::error::{domain, Result};

/// Overlapping-window absolute moments of aggregated returns and the
/// autocorrelation of absolute returns.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub q_set: Vec<f64>,
    pub tau_set: Vec<usize>,
    /// `abs_moments[i][j] = E|R_tau_j|^q_i` with `R_tau` the sum of `tau`
    /// consecutive returns.
    pub abs_moments: Vec<Vec<f64>>,
    /// Autocorrelation of `|x|` at lags `1..=abs_acf.len()`.
    pub abs_acf: Vec<f64>,
}

impl MomentTable {
    /// Generalized Hurst exponent: least-squares slope of
    /// `ln E|R_tau|^q` against `ln tau`, divided by `q`.
    pub fn hurst(&self, q_index: usize) -> Result<f64> {
        if self.tau_set.len() < 2 {
            return domain("Hurst fit needs at least two aggregation scales");
        }
        let xs: Vec<f64> = self.tau_set.iter().map(|&t| (t as f64).ln()).collect();
        let ys: Vec<f64> = self.abs_moments[q_index].iter().map(|m| m.ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        Ok(sxy / sxx / self.q_set[q_index])
    }
}

fn prefix_sums(x: &[f64]) -> Vec<f64> {
    let mut p = Vec::with_capacity(x.len() + 1);
    p.push(0.0);
    let mut acc = 0.0;
    for v in x {
        acc += v;
        p.push(acc);
    }
    p
}

/// `E|R_tau|^q` over all overlapping windows.
pub(crate) fn aggregated_abs_moment(prefix: &[f64], tau: usize, q: f64) -> f64 {
    let n = prefix.len() - 1 - tau + 1;
    let mut acc = 0.0;
    for s in 0..n {
        acc += (prefix[s + tau] - prefix[s]).abs().powf(q);
    }
    acc / n as f64
}

/// Autocorrelation of `|x|` at one lag, with the full-sample mean and
/// variance.
pub(crate) fn abs_autocorrelation(abs: &[f64], mean: f64, var: f64, lag: usize) -> f64 {
    let n = abs.len();
    let mut acc = 0.0;
    for t in 0..n - lag {
        acc += (abs[t] - mean) * (abs[t + lag] - mean);
    }
    acc / n as f64 / var
}

fn abs_stats(x: &[f64]) -> (Vec<f64>, f64, f64) {
    let abs: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let mean = abs.iter().sum::<f64>() / abs.len() as f64;
    let var = abs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / abs.len() as f64;
    (abs, mean, var)
}

/// Moment table of `returns` for the given orders and scales, with absolute
/// autocorrelations up to `max_lag`.
pub fn empirical_moments(returns: &[f64], q_set: &[f64], tau_set: &[usize], max_lag: usize) -> Result<MomentTable> {
    let max_tau = tau_set.iter().copied().max().unwrap_or(0);
    if q_set.is_empty() || tau_set.is_empty() || tau_set.contains(&0) {
        return domain("need at least one moment order and positive aggregation scales");
    }
    if q_set.iter().any(|q| !(*q > 0.0)) {
        return domain("moment orders must be positive");
    }
    if returns.len() < 5 * max_tau.max(1) || returns.len() <= max_lag + 1 {
        return domain(format!(
            "{} returns are too few for scales up to {max_tau} and lags up to {max_lag}",
            returns.len()
        ));
    }
    let prefix = prefix_sums(returns);
    let abs_moments = q_set
        .iter()
        .map(|&q| tau_set.iter().map(|&tau| aggregated_abs_moment(&prefix, tau, q)).collect())
        .collect();
    let (abs, mean, var) = abs_stats(returns);
    let abs_acf = if var > 0.0 {
        (1..=max_lag).map(|l| abs_autocorrelation(&abs, mean, var, l)).collect()
    } else {
        vec![0.0; max_lag]
    };
    Ok(MomentTable { q_set: q_set.to_vec(), tau_set: tau_set.to_vec(), abs_moments, abs_acf })
}

/// Scale-free moment conditions used for shape calibration.
///
/// The series is demeaned and divided by its sample standard deviation, so
/// the features do not depend on the volatility scale. Features are
/// `ln E|R_tau|^q` for every `(q, tau)` followed by the autocorrelation of
/// `|x|` at each lag in `acf_lags`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSpec {
    pub q_set: Vec<f64>,
    pub tau_set: Vec<usize>,
    pub acf_lags: Vec<usize>,
}

impl Default for MomentSpec {
    fn default() -> Self {
        MomentSpec { q_set: vec![1.0, 2.0, 4.0], tau_set: vec![1, 2, 5, 10, 21, 42], acf_lags: vec![1, 5, 10, 21, 63] }
    }
}

impl MomentSpec {
    pub fn len(&self) -> usize {
        self.q_set.len() * self.tau_set.len() + self.acf_lags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn labels(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.len());
        for q in &self.q_set {
            for tau in &self.tau_set {
                out.push(format!("ln_abs_moment_q{q}_tau{tau}"));
            }
        }
        out.extend(self.acf_lags.iter().map(|l| format!("abs_acf_lag{l}")));
        out
    }

    pub fn min_len(&self) -> usize {
        let max_tau = self.tau_set.iter().copied().max().unwrap_or(1);
        let max_lag = self.acf_lags.iter().copied().max().unwrap_or(0);
        (5 * max_tau).max(2 * max_lag + 2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_empty() || self.tau_set.contains(&0) || self.acf_lags.contains(&0) {
            return domain("moment spec needs features with positive scales and lags");
        }
        if self.q_set.iter().any(|q| !(*q > 0.0)) {
            return domain("moment orders must be positive");
        }
        Ok(())
    }

    /// Feature vector of one series.
    pub fn features(&self, returns: &[f64]) -> Result<Vec<f64>> {
        if returns.len() < self.min_len() {
            return domain(format!("{} returns are too few, need {}", returns.len(), self.min_len()));
        }
        let n = returns.len() as f64;
        let mean = returns.iter().sum::<f64>() / n;
        let sd = (returns.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        if !(sd > 1e-12 * mean.abs()) {
            return domain("series has zero variance");
        }
        let z: Vec<f64> = returns.iter().map(|v| (v - mean) / sd).collect();
        let prefix = prefix_sums(&z);
        let mut out = Vec::with_capacity(self.len());
        for &q in &self.q_set {
            for &tau in &self.tau_set {
                out.push(aggregated_abs_moment(&prefix, tau, q).ln());
            }
        }
        let (abs, am, av) = abs_stats(&z);
        out.extend(self.acf_lags.iter().map(|&l| abs_autocorrelation(&abs, am, av, l)));
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rand_pcg::Pcg64Mcg::seed_from_u64(seed);
        (0..n).map(|_| { let z: f64 = StandardNormal.sample(&mut rng); 0.01 * z }).collect()
    }

    #[test]
    fn brownian_scaling() {
        let x = gaussian(200_000, 1);
        let t = empirical_moments(&x, &[1.0, 2.0], &[1, 2, 4, 8, 16, 32], 5).unwrap();
        for q in 0..2 {
            let h = t.hurst(q).unwrap();
            assert!((h - 0.5).abs() < 0.02, "q index {q}: {h}");
        }
        assert!(t.abs_acf.iter().all(|c| c.abs() < 0.02));
    }

    #[test]
    fn unit_scale_second_moment_is_sample_second_moment() {
        let x = gaussian(500, 2);
        let t = empirical_moments(&x, &[2.0], &[1], 1).unwrap();
        let direct = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        assert!((t.abs_moments[0][0] - direct).abs() < 1e-18);
    }

    #[test]
    fn short_series_is_rejected() {
        assert!(empirical_moments(&[0.1; 20], &[2.0], &[10], 5).is_err());
        assert!(empirical_moments(&[0.1; 200], &[2.0], &[0], 5).is_err());
        assert!(MomentSpec::default().features(&[0.1; 100]).is_err());
        assert!(MomentSpec::default().features(&[0.1; 2000]).is_err());
    }

    #[test]
    fn features_are_scale_and_shift_free() {
        let x = gaussian(2000, 3);
        let spec = MomentSpec::default();
        let a = spec.features(&x).unwrap();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v + 0.2).collect();
        let b = spec.features(&y).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-10);
        }
        assert_eq!(spec.labels().len(), a.len());
    }
}
