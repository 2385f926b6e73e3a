//! Quadratic-covariation estimators in space and time, forward and divergence
//! integrals, weighted norms and Itô residuals.

pub mod bias;
pub mod estimators;
pub mod functions;
pub mod ito;
pub mod norms;
pub mod output;

pub use bias::{qv_bias_space, qv_bias_time};
pub use estimators::{
    forward_integral_space, spatial_pqc, spatial_pqc_reference, spatial_qv, temporal_pqc, temporal_pqc_reference,
    temporal_qv, Path,
};
pub use functions::{registry, TestFunction};
pub use ito::{
    gaussian_trace, growth_threshold, ito_residual_space, ito_residual_time, ito_residual_time_limit_form,
    ito_residual_time_with_trace, temporal_divergence_integral, temporal_symmetric_sum, TemporalTrace,
};
pub use norms::{norm_hstar, norm_ht, Norm};
pub use output::{EpsilonSchedule, EstimatorOutput, ReplicateRecord, ScheduleKind};
