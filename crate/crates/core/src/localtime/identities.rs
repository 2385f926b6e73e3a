//! Residuals of the Bouleau-Yor identity and the Tanaka formulas.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::qcov::estimators::forward_space_with;
use crate::qcov::{spatial_pqc, temporal_symmetric_sum, Path, TestFunction};

use super::{local_time_grid_space, local_time_space, weighted_local_time_grid, weighted_local_time_time, Mollifier, LEVELS};

/// `[f(W), W]_x + ∫ f(a) L(da, x)`, the covariation at scale `delta` and the
/// Stieltjes integral as a midpoint sum over the gridded local time.
pub fn bouleau_yor_residual(f: &TestFunction, path: &Path, x: f64, delta: f64, k: &Mollifier) -> Result<f64> {
    let pqc = spatial_pqc(path, f, x, delta)?;
    let lt = local_time_grid_space(path, x, k, LEVELS)?;
    Ok(pqc + lt.stieltjes(|a| f.eval(a)))
}

/// Residuals of the three Tanaka identities for `(·-a)⁺`, `(·-a)⁻` and `|·-a|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TanakaResiduals {
    pub positive: f64,
    pub negative: f64,
    /// Always `positive + negative`.
    pub absolute: f64,
}

/// Tanaka residuals over `I_x`, with `δW` realized as the forward integral at scale `delta`:
///
/// `(W_x - a)⁺ - (W_0 - a)⁺ - ∫ 1{W > a} δW - ½ L(a, x)` and
/// `(W_x - a)⁻ - (W_0 - a)⁻ + ∫ 1{W < a} δW - ½ L(a, x)`.
pub fn tanaka_residual_space(a: f64, path: &Path, x: f64, delta: f64, k: &Mollifier) -> Result<TanakaResiduals> {
    let w = path.values();
    let (ws, we) = (w[path.node(x.min(0.0))?], w[path.node(x.max(0.0))?]);
    let above = forward_space_with(path, &|v| if v > a { 1.0 } else { 0.0 }, x, delta)?;
    let below = forward_space_with(path, &|v| if v < a { 1.0 } else { 0.0 }, x, delta)?;
    let half_l = 0.5 * local_time_space(path, a, x, k)?;
    let positive = (we - a).max(0.0) - (ws - a).max(0.0) - above - half_l;
    let negative = (a - we).max(0.0) - (a - ws).max(0.0) + below - half_l;
    Ok(TanakaResiduals { positive, negative, absolute: positive + negative })
}

/// `|B_t - a| - |B_0 - a| - ∫_0^t sign(B_s - a) δB_s - 𝓛(a, t)` at mesh `eps`.
///
/// The divergence integral is the trapezoidal sum of `sign(B - a)` minus its
/// Gaussian trace `½ ∫ f'(y) 𝓛(y, t) dy = -½ ∫ f d𝓛`, the latter taken as a
/// midpoint Stieltjes sum over the gridded weighted local time.
pub fn tanaka_residual_time(a: f64, path: &Path, t: f64, eps: f64, k: &Mollifier) -> Result<f64> {
    let sign = |v: f64| {
        if v > a {
            1.0
        } else if v < a {
            -1.0
        } else {
            0.0
        }
    };
    let sym = temporal_symmetric_sum(path, &sign, t, eps)?;
    let lt = weighted_local_time_grid(path, t, k, LEVELS)?;
    let trace = -0.5 * lt.stieltjes(sign);
    let local = weighted_local_time_time(path, a, t, k)?;
    let b = path.values();
    let n = path.node(t)?;
    Ok((b[n] - a).abs() - (b[0] - a).abs() - (sym - trace) - local)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localtime::Profile;
    use crate::qcov::registry;

    fn axis(n: usize, h: f64) -> Vec<f64> {
        (0..n).map(|i| i as f64 * h).collect()
    }

    #[test]
    fn constant_function_residual_vanishes() {
        let c = axis(2049, 1.0 / 1024.0);
        let v: Vec<f64> = c.iter().map(|x| (4.0 * x).sin()).collect();
        let p = Path::new(&c, &v).unwrap();
        let k = Mollifier::with_bandwidth(0.05, Profile::Bump).unwrap();
        let r = bouleau_yor_residual(&registry::constant(2.0), &p, 1.0, 1.0 / 64.0, &k).unwrap();
        assert!(r.abs() < 1e-12);
    }

    #[test]
    fn level_outside_range_reduces_to_telescoping() {
        let c = axis(2049, 1.0 / 1024.0);
        let v: Vec<f64> = c.iter().map(|x| (4.0 * x).sin()).collect();
        let p = Path::new(&c, &v).unwrap();
        let k = Mollifier::with_bandwidth(0.05, Profile::Bump).unwrap();
        let r = tanaka_residual_space(-3.0, &p, 1.0, 1.0 / 256.0, &k).unwrap();
        // Only the forward-integral discretization of ∫ dW remains.
        assert!(r.positive.abs() < 0.02, "{r:?}");
        assert_eq!(r.absolute, r.positive + r.negative);
        let t = tanaka_residual_time(-3.0, &p, 1.0, 1.0 / 256.0, &k).unwrap();
        assert!(t.abs() < 1e-12);
    }
}
