use chrono::NaiveDate;
use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use super::moments::MomentSpec;
use crate::error::{domain, Result};
use crate::model::{simulate_x, ModelParams, ReturnSeries};
use crate::rng::{derive_seed, stream_rng, STREAM_AUX};

/// Evenly spaced values `lo, lo + step, ...` not exceeding `hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridAxis {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return domain(format!("invalid grid axis [{lo}, {hi}] step {step}"));
        }
        Ok(GridAxis { lo, hi, step })
    }

    pub fn single(v: f64) -> Self {
        GridAxis { lo: v, hi: v, step: 1.0 }
    }

    pub fn values(&self) -> Vec<f64> {
        if !(self.step > 0.0) || !(self.lo <= self.hi) {
            return Vec::new();
        }
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        // Snap to 12 decimals so values print as the grid was declared.
        (0..n).map(|k| ((self.lo + self.step * k as f64) * 1e12).round() / 1e12).collect()
    }
}

/// Search grid for `(D, nu, alpha)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationGrid {
    pub d: GridAxis,
    pub nu: GridAxis,
    pub alpha: GridAxis,
}

impl Default for CalibrationGrid {
    fn default() -> Self {
        CalibrationGrid {
            d: GridAxis { lo: 0.1, hi: 0.35, step: 5e-3 },
            nu: GridAxis { lo: 1e-4, hi: 1e-3, step: 1e-4 },
            alpha: GridAxis { lo: 3.0, hi: 10.0, step: 0.5 },
        }
    }
}

impl CalibrationGrid {
    pub fn axes(&self) -> [Vec<f64>; 3] {
        [self.d.values(), self.nu.values(), self.alpha.values()]
    }

    /// Cells in `(D, nu, alpha)` lexicographic order.
    pub fn cells(&self) -> Vec<[f64; 3]> {
        let [ds, nus, alphas] = self.axes();
        let mut out = Vec::with_capacity(ds.len() * nus.len() * alphas.len());
        for &d in &ds {
            for &nu in &nus {
                for &alpha in &alphas {
                    out.push([d, nu, alpha]);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeCalibrationConfig {
    /// ARCH memory, held fixed.
    pub m: usize,
    /// Simulated paths per grid cell.
    pub mc_budget: usize,
    /// Steps discarded at the start of each simulated path.
    pub burn_in: usize,
    pub spec: MomentSpec,
    pub bootstrap_reps: usize,
    pub block_len: usize,
    /// Weighting of moment discrepancies.
    pub weighting: Weighting,
    /// An axis is reported flat when the objective along it, through the
    /// optimum, varies by at most this fraction of its minimum.
    pub flat_tol: f64,
}

impl Default for ShapeCalibrationConfig {
    fn default() -> Self {
        ShapeCalibrationConfig {
            m: 21,
            mc_budget: 200,
            burn_in: 100,
            spec: MomentSpec::default(),
            bootstrap_reps: 200,
            block_len: 63,
            flat_tol: 1e-9,
            weighting: Weighting::Diagonal,
        }
    }
}

/// How moment discrepancies are weighted in the objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weighting {
    /// Inverse bootstrap variances.
    Diagonal,
    /// Inverse of the bootstrap covariance, shrunk toward its diagonal by
    /// the given fraction.
    Covariance { shrinkage: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentDiagnostic {
    pub label: String,
    pub data: f64,
    pub model: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellObjective {
    pub d: f64,
    pub nu: f64,
    pub alpha: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowMeta {
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
    pub len: usize,
}

/// Outcome of the grid search. `params` carries the fitted `(D, nu, alpha)`
/// and `M`; `beta`, `mu` and `r` hold unit/zero placeholders until the
/// scale step fills them in.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub params: ModelParams<f64>,
    pub objective: f64,
    pub diagnostics: Vec<MomentDiagnostic>,
    pub window: WindowMeta,
    /// Per-axis parabolic refinement around the optimum (off-grid).
    pub refined: [f64; 3],
    /// Axes along which the objective is flat through the optimum.
    pub flat_axes: [bool; 3],
    pub cells: Vec<CellObjective>,
    pub seed: u64,
}

impl CalibrationResult {
    pub fn identifiable(&self) -> bool {
        !self.flat_axes.iter().any(|&f| f)
    }
}

/// Covariance of the feature vector under a moving-block bootstrap of
/// the data.
pub fn bootstrap_covariance(returns: &[f64], spec: &MomentSpec, reps: usize, block_len: usize, seed: u64) -> Result<DMatrix<f64>> {
    let n = returns.len();
    let block = block_len.clamp(1, (n / 2).max(1));
    if reps < 2 {
        return domain("bootstrap needs at least two replications");
    }
    let samples: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, STREAM_AUX, b as u64);
            let mut resampled = Vec::with_capacity(n);
            while resampled.len() < n {
                let start = rng.random_range(0..=n - block);
                let take = block.min(n - resampled.len());
                resampled.extend_from_slice(&returns[start..start + take]);
            }
            spec.features(&resampled)
        })
        .collect::<Result<_>>()?;
    let k = spec.len();
    let mean: Vec<f64> = (0..k).map(|j| samples.iter().map(|s| s[j]).sum::<f64>() / reps as f64).collect();
    let mut cov = DMatrix::zeros(k, k);
    for s in &samples {
        for i in 0..k {
            for j in 0..=i {
                cov[(i, j)] += (s[i] - mean[i]) * (s[j] - mean[j]);
            }
        }
    }
    for i in 0..k {
        for j in 0..=i {
            let v = cov[(i, j)] / (reps - 1) as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    Ok(cov)
}

/// Weight matrix of the objective. Features with (numerically) zero
/// bootstrap variance are excluded.
pub fn weight_matrix(cov: &DMatrix<f64>, weighting: Weighting) -> Result<DMatrix<f64>> {
    let k = cov.nrows();
    let active: Vec<usize> = (0..k).filter(|&i| cov[(i, i)] > 1e-20).collect();
    let mut w = DMatrix::zeros(k, k);
    match weighting {
        Weighting::Diagonal => {
            for &i in &active {
                w[(i, i)] = 1.0 / cov[(i, i)];
            }
        }
        Weighting::Covariance { shrinkage } => {
            if !(0.0..=1.0).contains(&shrinkage) {
                return domain(format!("shrinkage {shrinkage} outside [0, 1]"));
            }
            let n = active.len();
            let sub = DMatrix::from_fn(n, n, |i, j| {
                let v = cov[(active[i], active[j])];
                if i == j { v } else { (1.0 - shrinkage) * v }
            });
            let inv = sub
                .cholesky()
                .ok_or_else(|| crate::Error::Numeric("bootstrap covariance is not positive definite".into()))?
                .inverse();
            for i in 0..n {
                for j in 0..n {
                    w[(active[i], active[j])] = inv[(i, j)];
                }
            }
        }
    }
    Ok(w)
}

fn quadratic_form(w: &DMatrix<f64>, e: &[f64]) -> f64 {
    let k = e.len();
    let mut acc = 0.0;
    for i in 0..k {
        if e[i] == 0.0 {
            continue;
        }
        for j in 0..k {
            acc += e[i] * w[(i, j)] * e[j];
        }
    }
    acc
}

/// Mean feature vector over `paths` simulated windows of length `len`.
/// Path `p` uses the same seed for every parameter value.
pub fn simulated_features(
    params: &ModelParams<f64>,
    spec: &MomentSpec,
    len: usize,
    paths: usize,
    burn_in: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut mean = vec![0.0; spec.len()];
    for p in 0..paths {
        let sim = simulate_x(params, burn_in + len, derive_seed(seed, STREAM_AUX, p as u64))?;
        let f = spec.features(&sim.x[burn_in..])?;
        mean.iter_mut().zip(&f).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= paths as f64);
    Ok(mean)
}

/// Grid search for `(D, nu, alpha)` by weighted simulated moment matching.
pub fn calibrate_shape(
    series: &ReturnSeries,
    grid: &CalibrationGrid,
    cfg: &ShapeCalibrationConfig,
    seed: u64,
) -> Result<CalibrationResult> {
    cfg.spec.validate()?;
    let cells = grid.cells();
    if cells.is_empty() {
        return domain("calibration grid is empty");
    }
    if cfg.mc_budget < 1 || cfg.m < 1 {
        return domain("need mc_budget >= 1 and M >= 1");
    }
    let returns = series.returns();
    let data = cfg.spec.features(returns)?;
    let cov = bootstrap_covariance(returns, &cfg.spec, cfg.bootstrap_reps, cfg.block_len, seed)?;
    let wmat = weight_matrix(&cov, cfg.weighting)?;
    let sim_seed = derive_seed(seed, STREAM_AUX, u64::MAX);
    let evaluated: Vec<(f64, Vec<f64>)> = cells
        .par_iter()
        .map(|&[d, nu, alpha]| {
            let params = ModelParams::new(d, nu, alpha, 1.0, cfg.m, 0.0, 0.0)?;
            let model = simulated_features(&params, &cfg.spec, returns.len(), cfg.mc_budget, cfg.burn_in, sim_seed)?;
            let err: Vec<f64> = data.iter().zip(&model).map(|(a, b)| a - b).collect();
            let obj = quadratic_form(&wmat, &err);
            Ok((obj, model))
        })
        .collect::<Result<_>>()?;
    let best = evaluated
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
        .map(|(k, _)| k)
        .expect("non-empty grid");
    let [d, nu, alpha] = cells[best];
    let axes = grid.axes();
    let dims = [axes[0].len(), axes[1].len(), axes[2].len()];
    let idx = [best / (dims[1] * dims[2]), (best / dims[2]) % dims[1], best % dims[2]];
    let flat_index = |i: [usize; 3]| (i[0] * dims[1] + i[1]) * dims[2] + i[2];
    let mut refined = [d, nu, alpha];
    let mut flat_axes = [false; 3];
    let f0 = evaluated[best].0;
    for axis in 0..3 {
        let line: Vec<f64> = (0..dims[axis])
            .map(|k| {
                let mut i = idx;
                i[axis] = k;
                evaluated[flat_index(i)].0
            })
            .collect();
        if line.len() > 1 {
            let hi = line.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            flat_axes[axis] = hi - f0 <= cfg.flat_tol * f0.abs().max(f64::MIN_POSITIVE);
        }
        let k = idx[axis];
        if k > 0 && k + 1 < line.len() {
            let (fm, fp) = (line[k - 1], line[k + 1]);
            let curv = fp - 2.0 * f0 + fm;
            if curv > 0.0 {
                let step = axes[axis][1] - axes[axis][0];
                refined[axis] = axes[axis][k] - 0.5 * step * (fp - fm) / curv;
            }
        }
    }
    let diagnostics = cfg
        .spec
        .labels()
        .into_iter()
        .zip(&data)
        .zip(&evaluated[best].1)
        .enumerate()
        .map(|(k, ((label, &data), &model))| MomentDiagnostic { label, data, model, weight: wmat[(k, k)] })
        .collect();
    let cells_out = cells
        .iter()
        .zip(&evaluated)
        .map(|(&[d, nu, alpha], (objective, _))| CellObjective { d, nu, alpha, objective: *objective })
        .collect();
    Ok(CalibrationResult {
        params: ModelParams::new(d, nu, alpha, 1.0, cfg.m, 0.0, 0.0)?,
        objective: f0,
        diagnostics,
        window: WindowMeta { start: series.dates().first().copied(), end: series.dates().last().copied(), len: series.len() },
        refined,
        flat_axes,
        cells: cells_out,
        seed,
    })
}
