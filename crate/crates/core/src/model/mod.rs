//! The switching ARCH return process.
//!
//! Returns are `X_t = a(I_t) * Y_t`, with `Y_t` an ARCH(M) process whose
//! conditional laws are Gaussian mixtures under an inverse-Gamma volatility
//! prior, and `I_t` a restart counter on the positive integers.

mod density;
mod params;
mod series;
mod simulate;

pub use density::{
    a_coefficient, a_squared, conditional_y_density, inverse_gamma_sigma_density, ln_phi_density,
    ln_predictive_density, phi_density, predictive_density, restart_initial_law, restart_transition,
    sum_a_squared,
};
pub use params::ModelParams;
pub use series::{RestartPath, ReturnSeries};
pub use simulate::{
    continue_y, simulate_i, simulate_i_from, simulate_residuals, simulate_x, simulate_y,
    x_from_components, y_from_residuals, ResidualSampler, SimulatedPath,
};
