//! Experiment configuration, Monte Carlo aggregation, rate fits, scaling
//! checks and the runner that ties them into JSON reports.

mod cache;
pub mod config;
pub mod report;
mod run;
pub mod scaling;
pub mod stats;

pub use cache::{clear_path_cache, exact_paths};
pub use config::{Axis, ExperimentConfig, ExperimentKind};
pub use report::{Comparison, Criterion, RunReport};
pub use run::run;
pub use scaling::{scaling_limit_check, ScalingReport};
pub use stats::{mc_aggregate, rate_fit, trend_violations, Aggregate, RateFit};
