//! Gaussian-weighted function norms that bound the second moments of the
//! covariation estimators.

use std::cell::RefCell;
use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{domain, Result};
use crate::quad::{integrate, QuadratureConfig};

use super::functions::TestFunction;

/// A squared norm, or a divergence flag when the growth exponent is too large.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Norm {
    pub squared: f64,
    pub error: f64,
    pub divergent: bool,
}

impl Norm {
    fn divergent() -> Self {
        Self { squared: f64::INFINITY, error: 0.0, divergent: true }
    }

    pub fn value(&self) -> f64 {
        self.squared.sqrt()
    }
}

// The weight e^{-c z²} drops below e^{-45} ≈ 3e-20 at this cut.
const TAIL_EXPONENT: f64 = 45.0;

/// Integrate `g` over `[-cut, cut]`, splitting at 0 and at `kinks`.
fn integrate_split(g: &dyn Fn(f64) -> f64, cut: f64, kinks: &[f64], quad: &QuadratureConfig) -> Result<(f64, f64)> {
    let mut breaks: Vec<f64> = vec![-cut, 0.0, cut];
    breaks.extend(kinks.iter().copied().filter(|k| k.abs() < cut));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut value = 0.0;
    let mut error = 0.0;
    for w in breaks.windows(2) {
        let r = integrate(g, w[0], w[1], quad)?;
        value += r.value;
        error += r.error;
    }
    Ok((value, error))
}

/// `‖f‖²_{H_t} = |x| (4πt)^{-1/4} ∫ |f(z)|² (√t + z²) e^{-√π z²/(2√t)} dz`.
///
/// Divergent when the declared growth exponent reaches `√π / (4√t)`, or when
/// the integrand has not decayed at the truncation point.
pub fn norm_ht(f: &TestFunction, t: f64, x: f64, quad: &QuadratureConfig) -> Result<Norm> {
    if !(t > 0.0) || !t.is_finite() || !x.is_finite() {
        return Err(domain(format!("norm_ht needs t > 0 and finite x, got t={t}, x={x}")));
    }
    let a = PI.sqrt() / (2.0 * t.sqrt());
    let beta = f.beta();
    if beta >= a / 2.0 {
        return Ok(Norm::divergent());
    }
    let c = a - 2.0 * beta;
    let cut = (TAIL_EXPONENT / c).sqrt() + 1.0;
    let g = |z: f64| {
        let v = f.eval(z);
        v * v * (t.sqrt() + z * z) * (-a * z * z).exp()
    };
    let (value, error) = integrate_split(&g, cut, f.kinks(), quad)?;
    let edge = g(cut).abs().max(g(-cut).abs());
    if !value.is_finite() || edge * cut > 1e-10 * value.abs().max(1e-300) && edge > 1e-300 {
        return Ok(Norm::divergent());
    }
    let pre = x.abs() / (4.0 * PI * t).powf(0.25);
    Ok(Norm { squared: pre * value, error: pre * error, divergent: false })
}

/// `‖f‖²_{H*} = (4π)^{-1/4} ∫_0^T ∫ |f(z)|² e^{-z²√π/(2√s)} dz ds / s^{3/4}`,
/// evaluated after `s = w⁴`, `z = w ζ` as
/// `4 (4π)^{-1/4} ∫_0^{T^{1/4}} w ∫ |f(w ζ)|² e^{-√π ζ²/2} dζ dw`.
pub fn norm_hstar(f: &TestFunction, big_t: f64, quad: &QuadratureConfig) -> Result<Norm> {
    if !(big_t > 0.0) || !big_t.is_finite() {
        return Err(domain(format!("norm_hstar needs T > 0, got {big_t}")));
    }
    let beta = f.beta();
    if beta >= PI.sqrt() / (4.0 * big_t.sqrt()) {
        return Ok(Norm::divergent());
    }
    let a = PI.sqrt() / 2.0;
    let c = a - 2.0 * beta * big_t.sqrt();
    let cut = (TAIL_EXPONENT / c).sqrt() + 1.0;
    let failure = RefCell::new(None);
    let inner = |w: f64| -> f64 {
        if w == 0.0 {
            return 0.0;
        }
        let kinks: Vec<f64> = f.kinks().iter().map(|k| k / w).collect();
        let g = |zeta: f64| {
            let v = f.eval(w * zeta);
            v * v * (-a * zeta * zeta).exp()
        };
        match integrate_split(&g, cut, &kinks, quad) {
            Ok((v, _)) => w * v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let r = integrate(inner, 0.0, big_t.powf(0.25), quad)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    if !r.value.is_finite() {
        return Ok(Norm::divergent());
    }
    let pre = 4.0 / (4.0 * PI).powf(0.25);
    Ok(Norm { squared: pre * r.value, error: pre * r.error, divergent: false })
}
