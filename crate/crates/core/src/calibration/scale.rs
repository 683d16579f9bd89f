use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::model::{simulate_x, ModelParams};
use crate::rng::{derive_seed, STREAM_AUX};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleCalibrationConfig {
    /// Simulated windows used for the model second moment.
    pub n_paths: usize,
    pub burn_in: usize,
}

impl Default for ScaleCalibrationConfig {
    fn default() -> Self {
        ScaleCalibrationConfig { n_paths: 2000, burn_in: 100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleFit {
    pub beta: f64,
    /// Sample standard deviation of the window.
    pub sigma_bs: f64,
    /// Sample mean of the window.
    pub mu: f64,
    /// Sample second moment of the window.
    pub m2_data: f64,
    /// Simulated `E[X^2]` per step at `beta = 1`.
    pub m2_model_unit: f64,
}

/// Simulated mean of `x^2` over windows of `len` steps. With the random
/// numbers held fixed every return is proportional to `beta`, so the
/// result scales exactly as `beta^2`.
pub fn model_second_moment(params: &ModelParams<f64>, len: usize, cfg: &ScaleCalibrationConfig, seed: u64) -> Result<f64> {
    if cfg.n_paths < 1 || len < 1 {
        return domain("need at least one path and one step");
    }
    let per_path: Vec<f64> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|p| {
            let sim = simulate_x(params, cfg.burn_in + len, derive_seed(seed, STREAM_AUX, p as u64))?;
            Ok(sim.x[cfg.burn_in..].iter().map(|v| v * v).sum::<f64>() / len as f64)
        })
        .collect::<Result<_>>()?;
    Ok(per_path.iter().sum::<f64>() / cfg.n_paths as f64)
}

/// `sigma_bs` and `mu` from the sample, and `beta` matching the model's
/// unconditional second moment to the sample one.
///
/// The match is solved in closed form from the `beta^2` scaling of
/// [`model_second_moment`] instead of by iteration.
pub fn calibrate_scale(
    returns: &[f64],
    shape: &ModelParams<f64>,
    cfg: &ScaleCalibrationConfig,
    seed: u64,
) -> Result<ScaleFit> {
    let n = returns.len();
    if n < 2 {
        return domain("scale calibration needs at least two returns");
    }
    let mu = returns.iter().sum::<f64>() / n as f64;
    let var = returns.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n - 1) as f64;
    if !(var.sqrt() > 1e-12 * mu.abs()) {
        return domain("window has zero variance");
    }
    let m2_data = returns.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let unit = shape.with_beta(1.0);
    let m2_model_unit = model_second_moment(&unit, n, cfg, seed)?;
    if !(m2_model_unit > 0.0 && m2_model_unit.is_finite()) {
        return Err(crate::Error::Numeric(format!("model second moment {m2_model_unit} unusable")));
    }
    Ok(ScaleFit { beta: (m2_data / m2_model_unit).sqrt(), sigma_bs: var.sqrt(), mu, m2_data, m2_model_unit })
}
