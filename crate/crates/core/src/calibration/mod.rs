//! Parameter estimation: `(D, nu, alpha)` by simulated moment matching on a
//! grid, then `beta`, `sigma_bs` and `mu` from a shorter window.

mod moments;
mod scale;
mod shape;

pub use moments::{empirical_moments, MomentSpec, MomentTable};
pub use scale::{calibrate_scale, model_second_moment, ScaleCalibrationConfig, ScaleFit};
pub use shape::{
    bootstrap_covariance, calibrate_shape, weight_matrix, simulated_features, CalibrationGrid, CalibrationResult, CellObjective,
    GridAxis, MomentDiagnostic, ShapeCalibrationConfig, Weighting, WindowMeta,
};
