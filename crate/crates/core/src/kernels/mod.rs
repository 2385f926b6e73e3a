//! Covariance, variance and increment kernels of the solution field `u(t, x)`.
//!
//! Every quadrature-backed quantity is written in the variable `v = √r`, which
//! turns the `r^{-1/2}` endpoint singularities into smooth integrands.

pub mod lemmas;

use std::f64::consts::{PI, SQRT_2};

use crate::error::{domain, Result};
use crate::quad::{integrate, integrate_to_infinity, Estimate, QuadratureConfig};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_677_94;
const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_286_95;

/// Arguments of a space-time covariance evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovQuery {
    pub t: f64,
    pub s: f64,
    pub x: f64,
    pub y: f64,
}

impl CovQuery {
    pub fn new(t: f64, x: f64, s: f64, y: f64) -> Result<Self> {
        check_time("t", t)?;
        check_time("s", s)?;
        if !x.is_finite() || !y.is_finite() {
            return Err(domain(format!("space coordinates must be finite, got x={x}, y={y}")));
        }
        Ok(Self { t, s, x, y })
    }

    /// Reorder so that `t >= s`, returning `(t, s, |x - y|)`.
    pub fn normalized(&self) -> (f64, f64, f64) {
        let d = (self.x - self.y).abs();
        if self.t >= self.s {
            (self.t, self.s, d)
        } else {
            (self.s, self.t, d)
        }
    }
}

/// Second-order structure of a pair `(u(t,x), u(s,y))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub sigma2_t: f64,
    pub sigma2_s: f64,
    pub mu: f64,
    pub rho2: f64,
    pub degenerate: bool,
}

fn check_time(name: &str, t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(domain(format!("{name} must be a finite time >= 0, got {t}")));
    }
    Ok(())
}

/// Gaussian heat kernel `p(t, x) = (2πt)^{-1/2} exp(-x²/(2t))`.
pub fn heat_kernel(t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(domain(format!("heat kernel needs t > 0, got {t}")));
    }
    if x.is_nan() {
        return Err(domain("heat kernel evaluated at NaN"));
    }
    Ok((-x * x / (2.0 * t)).exp() / (2.0 * PI * t).sqrt())
}

/// `E[u(t,x)²] = √(t/π)`.
pub fn variance(t: f64) -> Result<f64> {
    check_time("t", t)?;
    Ok((t / PI).sqrt())
}

/// Covariance along a fixed space point: `((t+s)^{1/2} - |t-s|^{1/2}) / √(2π)`.
pub fn cov_time(t: f64, s: f64) -> Result<f64> {
    check_time("t", t)?;
    check_time("s", s)?;
    Ok(cov_time_unchecked(t, s))
}

pub(crate) fn cov_time_unchecked(t: f64, s: f64) -> f64 {
    if t == s {
        return (t / PI).sqrt();
    }
    FRAC_1_SQRT_2PI * ((t + s).sqrt() - (t - s).abs().sqrt())
}

/// Full space-time covariance `E[u(t,x) u(s,y)]`.
///
/// With `t >= s`, substituting `t + s - 2r = v²` gives
/// `(1/√(2π)) ∫_{√(t-s)}^{√(t+s)} exp(-d²/(2v²)) dv`.
pub fn cov_spacetime(q: &CovQuery, quad: &QuadratureConfig) -> Result<Estimate> {
    let (t, s, d) = q.normalized();
    if s == 0.0 {
        return Ok(Estimate::exact(0.0));
    }
    let lo = (t - s).sqrt();
    let hi = (t + s).sqrt();
    let k = d * d / 2.0;
    let r = integrate(|v| gauss_ratio(k, v), lo, hi, quad)?;
    Ok(r.scale(FRAC_1_SQRT_2PI))
}

// exp(-k / v²) with the v → 0 limit handled.
fn gauss_ratio(k: f64, v: f64) -> f64 {
    if k == 0.0 {
        1.0
    } else if v == 0.0 {
        0.0
    } else {
        (-k / (v * v)).exp()
    }
}

// 1 - exp(-k / v²) without cancellation.
fn gauss_deficit(k: f64, v: f64) -> f64 {
    if k == 0.0 {
        0.0
    } else if v == 0.0 {
        1.0
    } else {
        -(-k / (v * v)).exp_m1()
    }
}

/// Equal-time spatial covariance `E[u(t,x) u(t,y)] = (1/√π) ∫_0^{√t} exp(-d²/(4v²)) dv`.
pub fn cov_space(t: f64, x: f64, y: f64, quad: &QuadratureConfig) -> Result<Estimate> {
    let q = CovQuery::new(t, x, t, y)?;
    let d = (q.x - q.y).abs();
    if t == 0.0 {
        return Ok(Estimate::exact(0.0));
    }
    let k = d * d / 4.0;
    let r = integrate(|v| gauss_ratio(k, v), 0.0, t.sqrt(), quad)?;
    Ok(r.scale(FRAC_1_SQRT_PI))
}

/// `variance(t) - cov_space(t, 0, d)`, evaluated directly so small separations
/// keep full relative accuracy.
pub fn space_deficit(t: f64, d: f64, quad: &QuadratureConfig) -> Result<Estimate> {
    check_time("t", t)?;
    if !d.is_finite() {
        return Err(domain(format!("distance must be finite, got {d}")));
    }
    if t == 0.0 || d == 0.0 {
        return Ok(Estimate::exact(0.0));
    }
    let k = d * d / 4.0;
    let r = integrate(|v| gauss_deficit(k, v), 0.0, t.sqrt(), quad)?;
    Ok(r.scale(FRAC_1_SQRT_PI))
}

/// The normalized spatial profile `f(d) = e^{-d²/(4t)} - (d/2t) ∫_d^∞ e^{-r²/(4t)} dr`,
/// so that `cov_space(t, 0, d) = √(t/π) f(d)`.
pub fn tail_ratio(t: f64, d: f64, quad: &QuadratureConfig) -> Result<Estimate> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(domain(format!("tail ratio needs t > 0, got {t}")));
    }
    if !(d >= 0.0) || !d.is_finite() {
        return Err(domain(format!("tail ratio needs a finite distance >= 0, got {d}")));
    }
    if d == 0.0 {
        return Ok(Estimate::exact(1.0));
    }
    let c = 4.0 * t;
    let lead = (-d * d / c).exp();
    if lead == 0.0 {
        return Ok(Estimate::exact(0.0));
    }
    // ∫_d^∞ e^{-r²/c} dr, written as ∫_0^∞ e^{-(d+w)²/c} dw and scaled by e^{d²/c}
    // so the integrand stays O(1) even far in the tail.
    let tail = integrate_to_infinity(|w| (-(2.0 * d * w + w * w) / c).exp(), 0.0, quad)?;
    let tail = tail.scale(lead * d / (2.0 * t));
    Ok(Estimate {
        value: lead - tail.value,
        error: tail.error,
    })
}

/// `Δ(s, t, z)` for `0 <= s <= t`: the closed part plus the exponential correction
/// `2 ∫_{√(t-s)}^{√(t+s)} (1 - e^{-z²/(2v²)}) dv`.
pub fn delta_increment(s: f64, t: f64, z: f64, quad: &QuadratureConfig) -> Result<Estimate> {
    check_time("s", s)?;
    check_time("t", t)?;
    if s > t {
        return Err(domain(format!("delta_increment needs s <= t, got s={s}, t={t}")));
    }
    if !z.is_finite() {
        return Err(domain(format!("distance must be finite, got {z}")));
    }
    let closed = (2.0 * t).sqrt() + (2.0 * s).sqrt() + (2.0 - SQRT_2) * (t - s).sqrt()
        - 2.0 * (t + s).sqrt();
    if z == 0.0 || s == 0.0 {
        return Ok(Estimate::exact(closed));
    }
    let k = z * z / 2.0;
    let corr = integrate(|v| gauss_deficit(k, v), (t - s).sqrt(), (t + s).sqrt(), quad)?;
    Ok(corr.scale(2.0).shift(closed))
}

/// `E[(u(t,x) - u(s,y))²] = (√(2(t-s)) + Δ(s, t, x-y)) / √(2π)`.
pub fn increment_second_moment(
    t: f64,
    x: f64,
    s: f64,
    y: f64,
    quad: &QuadratureConfig,
) -> Result<Estimate> {
    let q = CovQuery::new(t, x, s, y)?;
    let (t, s, d) = q.normalized();
    let delta = delta_increment(s, t, d, quad)?;
    Ok(delta.shift((2.0 * (t - s)).sqrt()).scale(FRAC_1_SQRT_2PI))
}

/// The same second moment through `var(t) + var(s) - 2 cov`.
pub fn increment_second_moment_expanded(
    t: f64,
    x: f64,
    s: f64,
    y: f64,
    quad: &QuadratureConfig,
) -> Result<Estimate> {
    let q = CovQuery::new(t, x, s, y)?;
    let c = cov_spacetime(&q, quad)?;
    Ok(Estimate {
        value: variance(t)? + variance(s)? - 2.0 * c.value,
        error: 2.0 * c.error,
    })
}

/// Variances, cross-covariance and determinant for `(u(t,x), u(s,x))`, `0 < s < t`.
///
/// The determinant uses `(√(ts) - t + √(t²-s²)) / π`.
pub fn moments_time_pair(t: f64, s: f64) -> Result<Moments> {
    check_time("t", t)?;
    check_time("s", s)?;
    if s > t {
        return Err(domain(format!("moments_time_pair needs s <= t, got s={s}, t={t}")));
    }
    let sigma2_t = (t / PI).sqrt();
    let sigma2_s = (s / PI).sqrt();
    let mu = cov_time_unchecked(t, s);
    if s == t || s == 0.0 {
        return Ok(Moments {
            sigma2_t,
            sigma2_s,
            mu,
            rho2: 0.0,
            degenerate: true,
        });
    }
    // √(t²-s²) - t = -s²/(t + √(t²-s²)) avoids cancellation as s → 0.
    let root = ((t - s) * (t + s)).sqrt();
    let rho2 = ((t * s).sqrt() - s * s / (t + root)) / PI;
    Ok(Moments {
        sigma2_t,
        sigma2_s,
        mu,
        rho2: rho2.max(0.0),
        degenerate: false,
    })
}
