//! Exact bias of the increment second moments behind the quadratic variations.

use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::quad::{integrate, QuadratureConfig};

/// `E[(u(t, y+ε) - u(t, y))²] - ε`, computed as
/// `-√(2/π) ε ∫_0^{ε/√(2t)} (1 - e^{-s²/2}) s^{-2} ds` (negative).
pub fn qv_bias_space(t: f64, eps: f64, quad: &QuadratureConfig) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(domain(format!("spatial bias needs t > 0, got {t}")));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(domain(format!("spatial bias needs eps > 0, got {eps}")));
    }
    let upper = eps / (2.0 * t).sqrt();
    let h = |s: f64| {
        if s < 1e-4 {
            // series of (1 - e^{-s²/2}) / s²
            let s2 = s * s;
            0.5 - s2 / 8.0 + s2 * s2 / 48.0
        } else {
            -(-0.5 * s * s).exp_m1() / (s * s)
        }
    };
    let r = integrate(h, 0.0, upper, quad)?;
    Ok(-(2.0 / PI).sqrt() * eps * r.value)
}

/// `E[(u(s+ε, x) - u(s, x))²] - 2√ε/√(2π)
///  = (√(2(s+ε)) - 2√(2s+ε) + √(2s)) / √(2π)`, rearranged to avoid cancellation.
pub fn qv_bias_time(s: f64, eps: f64) -> Result<f64> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(domain(format!("temporal bias needs s >= 0, got {s}")));
    }
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(domain(format!("temporal bias needs eps >= 0, got {eps}")));
    }
    let a = 2.0 * s;
    let p = (a + 2.0 * eps).sqrt() + (a + eps).sqrt();
    let q = (a + eps).sqrt() + a.sqrt();
    if p == 0.0 {
        return Ok(0.0);
    }
    let num = -2.0 * eps / (a.sqrt() + (a + 2.0 * eps).sqrt());
    Ok(eps * num / (p * q) / (2.0 * PI).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn temporal_bias_at_zero_eps() {
        assert_eq!(qv_bias_time(1.0, 0.0).unwrap(), 0.0);
        assert_eq!(qv_bias_time(0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn temporal_bias_matches_direct_form_away_from_cancellation() {
        for &(s, e) in &[(1.0f64, 0.5f64), (0.3, 2.0), (0.0, 0.7)] {
            let direct = ((2.0 * (s + e)).sqrt() - 2.0 * (2.0 * s + e).sqrt() + (2.0 * s).sqrt()) / (2.0 * PI).sqrt();
            assert!((qv_bias_time(s, e).unwrap() - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn spatial_bias_is_negative() {
        let q = QuadratureConfig::default();
        assert!(qv_bias_space(1.0, 0.1, &q).unwrap() < 0.0);
        assert!(qv_bias_space(0.0, 0.1, &q).is_err());
    }
}
