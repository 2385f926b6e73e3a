//! Itô-formula residuals in the space and time parameters.
//!
//! In space the stochastic integral is the regularized forward integral. In time
//! the forward regularization diverges at this roughness, so the divergence
//! integral is realized as a symmetric sum at lag `ε` minus the Gaussian trace
//! `½ ∫ f'(B_s) dσ²_s`, `σ²_s = √(s/π)`.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;

use super::estimators::{forward_space_with, spatial_pqc_with, temporal_pqc_with, temporal_weighted_integral, Path};
use super::functions::TestFunction;

/// Largest growth exponent admitted on `[0, t]`: `√π / (4√t)`.
pub fn growth_threshold(t: f64) -> f64 {
    PI.sqrt() / (4.0 * t.sqrt())
}

/// Endpoint nodes `(start, end)` of `I_x`, oriented from the smaller coordinate.
fn interval_ends(path: &Path, x: f64) -> Result<(usize, usize)> {
    Ok((path.node(x.min(0.0))?, path.node(x.max(0.0))?))
}

/// `F(W_end) - F(W_start) - ∫ F'(W) d⁻W - ½ [F'(W), W]`, with both terms at scale `delta`.
pub fn ito_residual_space(big_f: &TestFunction, path: &Path, x: f64, delta: f64) -> Result<f64> {
    let f = big_f.deriv()?;
    let (a, b) = interval_ends(path, x)?;
    let w = path.values();
    let fw = forward_space_with(path, &|v| f(v), x, delta)?;
    let q = spatial_pqc_with(path, &|v| f(v), x, delta)?;
    Ok(big_f.eval(w[b]) - big_f.eval(w[a]) - fw - 0.5 * q)
}

/// How the Gaussian trace `½ ∫_0^t f'(B_s) dσ²_s` is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TemporalTrace {
    /// Integrate the registered derivative of the integrand along the path.
    Smooth,
    /// Use a precomputed value, e.g. a weighted local time for non-smooth integrands.
    Value(f64),
}

/// Symmetric sum `Σ ½ (f(B_{s_{i+1}}) + f(B_{s_i})) (B_{s_{i+1}} - B_{s_i})` averaged over
/// the partitions `{0, θ, θ + ε, θ + 2ε, ..., t}` with `θ` running over the path nodes in
/// `(0, ε]`.
///
/// Every partition starts at 0 and ends at `t`, so for `f(y) = y` each sum telescopes to
/// `(B_t² - B_0²)/2` exactly. Averaging over `θ` is the discrete form of the regularized
/// symmetric integral `(1/ε) ∫ ½ (f(B_{s+ε}) + f(B_s)) (B_{s+ε} - B_s) ds`.
pub fn temporal_symmetric_sum(path: &Path, f: &dyn Fn(f64) -> f64, t: f64, eps: f64) -> Result<f64> {
    if path.coords()[0] != 0.0 {
        return Err(Error::Coverage("time path must start at 0".into()));
    }
    let k = path.lag(eps)?;
    let n = path.node(t)?;
    let b = path.values();
    let fb: Vec<f64> = b[..=n].iter().map(|&v| f(v)).collect();
    let piece = |i: usize, j: usize| 0.5 * (fb[j] + fb[i]) * (b[j] - b[i]);
    let sums: Vec<f64> = (1..=k)
        .map(|theta| {
            let mut terms = Vec::with_capacity(n / k + 2);
            let mut prev = 0;
            let mut node = theta;
            while node < n {
                terms.push(piece(prev, node));
                prev = node;
                node += k;
            }
            terms.push(piece(prev, n));
            pairwise_sum(&terms)
        })
        .collect();
    Ok(pairwise_sum(&sums) / k as f64)
}

/// `½ ∫_0^t g(B_s) dσ²_s = (1/(2√π)) ∫_0^t g(B_s) d√s`.
pub fn gaussian_trace(path: &Path, g: &dyn Fn(f64) -> f64, t: f64) -> Result<f64> {
    Ok(temporal_weighted_integral(path, g, t)? / (2.0 * PI.sqrt()))
}

/// Divergence integral `∫_0^t f(B_s) δB_s` at mesh `eps`.
pub fn temporal_divergence_integral(path: &Path, f: &TestFunction, t: f64, eps: f64, trace: TemporalTrace) -> Result<f64> {
    let sym = temporal_symmetric_sum(path, &|v| f.eval(v), t, eps)?;
    let tr = match trace {
        TemporalTrace::Smooth => {
            let d = f.deriv()?;
            gaussian_trace(path, &|v| d(v), t)?
        }
        TemporalTrace::Value(v) => v,
    };
    Ok(sym - tr)
}

fn check_growth(big_f: &TestFunction, t: f64) -> Result<()> {
    let limit = growth_threshold(t);
    if big_f.beta() >= limit {
        return Err(Error::Growth {
            id: big_f.id().to_string(),
            beta: big_f.beta(),
            limit,
        });
    }
    Ok(())
}

/// `F(B_t) - F(B_0) - ∫ F'(B) δB - (1/(2√2)) [F'(B), B]^{TQ}` at scale `eps`.
///
/// Needs `F''` for the trace; see [`ito_residual_time_with_trace`] otherwise.
pub fn ito_residual_time(big_f: &TestFunction, path: &Path, t: f64, eps: f64) -> Result<f64> {
    check_growth(big_f, t)?;
    let d2 = big_f.deriv2()?;
    let trace = gaussian_trace(path, &|v| d2(v), t)?;
    ito_residual_time_with_trace(big_f, path, t, eps, trace)
}

/// As [`ito_residual_time`] with the trace `½ ∫ F''(B_s) dσ²_s` supplied by the caller.
pub fn ito_residual_time_with_trace(big_f: &TestFunction, path: &Path, t: f64, eps: f64, trace: f64) -> Result<f64> {
    check_growth(big_f, t)?;
    let f = big_f.deriv()?;
    let sym = temporal_symmetric_sum(path, &|v| f(v), t, eps)?;
    let q = temporal_pqc_with(path, &|v| f(v), t, eps)?;
    let b = path.values();
    let n = path.node(t)?;
    Ok(big_f.eval(b[n]) - big_f.eval(b[0]) - (sym - trace) - q / (2.0 * SQRT_2))
}

/// The residual with the covariation replaced by its limit
/// `(1/(2√2)) ∫ F''(B_s) ds / √(2πs)`; isolates the stochastic-integral error.
pub fn ito_residual_time_limit_form(big_f: &TestFunction, path: &Path, t: f64, eps: f64) -> Result<f64> {
    check_growth(big_f, t)?;
    let f = big_f.deriv()?;
    let d2 = big_f.deriv2()?;
    let trace = gaussian_trace(path, &|v| d2(v), t)?;
    let sym = temporal_symmetric_sum(path, &|v| f(v), t, eps)?;
    let limit = temporal_weighted_integral(path, &|v| d2(v), t)? * (2.0 / PI).sqrt() / (2.0 * SQRT_2);
    let b = path.values();
    let n = path.node(t)?;
    Ok(big_f.eval(b[n]) - big_f.eval(b[0]) - (sym - trace) - limit)
}
