//! Infinite-state Markov-switching ARCH returns and their closed-form
//! martingale option prices.
//!
//! The density, kernel and closed-form pricing layer is generic over the
//! floating-point type through [`Scalar`]; inference, simulation, the
//! pricing engine and calibration work in `f64`. The aliases below fix the
//! scalar for the common cases.

pub mod calibration;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod inference;
pub mod market;
pub mod mixture;
pub mod model;
pub mod nodes;
pub mod pricing;
pub mod quadrature;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use inference::{InferenceConfig, TailMode};
pub use model::{RestartPath, ReturnSeries};
pub use pricing::{price_option, PreparedPricer, PriceResult, PricingConfig};
pub use scalar::Scalar;

/// Model parameters in double precision.
pub type Params = model::ModelParams<f64>;
/// Model parameters in single precision.
pub type Params32 = model::ModelParams<f32>;
