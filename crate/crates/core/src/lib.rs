//! Numerical verification toolkit for the stochastic heat equation
//! `∂u/∂t = ½ ∂²u/∂x² + Ẋ` driven by space-time white noise, started from zero.
//!
//! * [`kernels`]: exact covariances, increment moments and inequality checks.
//! * [`sampler`]: exact Gaussian sampling by Cholesky factorization, and a
//!   Crank–Nicolson integrator used as an independent oracle.
//! * [`qcov`]: quadratic-covariation estimators in space and time, forward
//!   integrals, weighted norms and Itô residuals.
//! * [`localtime`]: occupation densities, weighted local time, Bouleau–Yor and
//!   Tanaka residuals.
//! * [`harness`]: experiment configuration, Monte Carlo aggregation, rate fits
//!   and reports.

#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod grid;
pub mod harness;
pub mod kernels;
pub mod localtime;
pub mod numeric;
pub mod qcov;
pub mod quad;
pub mod rng;
pub mod sampler;

pub use error::{Error, Result};
pub use grid::FieldGrid;
pub use quad::{Estimate, QuadratureConfig};
