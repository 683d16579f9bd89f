//! Posterior inference of the hidden restart counter.

mod config;
mod future;
mod past;
mod window;

pub use config::{InferenceConfig, TailMode};
pub use future::{enumerate_future_scenarios, FutureRestartScenario, ScenarioSet};
pub use past::{sample_past_restarts, write_restart_samples, PastPosterior};
pub use window::{joint_xi_density, ln_joint_xi_density, WindowModel};
