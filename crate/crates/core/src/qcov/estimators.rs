//! Discretized partial quadratic covariations, quadratic variations and the
//! spatial forward integral on sampled paths.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numeric::{grid_index, trapezoid, trapezoid_uniform, uniform_step};

use super::functions::TestFunction;

/// A sampled path on a uniform coordinate axis.
#[derive(Debug, Clone, Copy)]
pub struct Path<'a> {
    coords: &'a [f64],
    values: &'a [f64],
    step: f64,
}

impl<'a> Path<'a> {
    pub fn new(coords: &'a [f64], values: &'a [f64]) -> Result<Self> {
        if coords.len() != values.len() {
            return Err(Error::Domain(format!(
                "{} coordinates but {} values",
                coords.len(),
                values.len()
            )));
        }
        let step = uniform_step(coords)
            .ok_or_else(|| Error::Domain("path coordinates must be uniform with at least two points".into()))?;
        Ok(Self { coords, values, step })
    }

    pub fn coords(&self) -> &'a [f64] {
        self.coords
    }

    pub fn values(&self) -> &'a [f64] {
        self.values
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Index of the node at coordinate `c`.
    pub fn node(&self, c: f64) -> Result<usize> {
        match grid_index(self.coords[0], self.step, c) {
            Some(i) if i < self.coords.len() => Ok(i),
            _ => Err(Error::Coverage(format!(
                "coordinate {c} is not a node of the path on [{}, {}] with step {:e}",
                self.coords[0],
                self.coords[self.coords.len() - 1],
                self.step
            ))),
        }
    }

    /// Lag in steps for increment scale `level`; must be an integer >= 2.
    pub fn lag(&self, level: f64) -> Result<usize> {
        let k = level / self.step;
        let kr = k.round();
        if !(level > 0.0) || (k - kr).abs() > 1e-6 * k.max(1.0) {
            return Err(Error::Domain(format!(
                "level {level:e} is not a multiple of the path step {:e}",
                self.step
            )));
        }
        if kr < 2.0 {
            return Err(Error::Domain(format!(
                "level {level:e} is below two path steps ({:e})",
                2.0 * self.step
            )));
        }
        Ok(kr as usize)
    }

    pub fn value_at(&self, c: f64) -> Result<f64> {
        Ok(self.values[self.node(c)?])
    }
}

/// Nodes `lo..=hi` spanning `I_x` and the lag `k`, with coverage of `hi + k`.
pub(crate) fn spatial_window(path: &Path, x: f64, delta: f64) -> Result<(usize, usize, usize)> {
    let k = path.lag(delta)?;
    let lo = path.node(x.min(0.0))?;
    let hi = path.node(x.max(0.0))?;
    if hi + k >= path.coords.len() {
        return Err(Error::Coverage(format!(
            "path must extend to {} for x = {x}, delta = {delta:e}",
            x.max(0.0) + delta
        )));
    }
    Ok((lo, hi, k))
}

/// Node of `t` and lag `k` on a path starting at time 0, with coverage of `t + eps`.
pub(crate) fn temporal_window(path: &Path, t: f64, eps: f64) -> Result<(usize, usize)> {
    if path.coords[0] != 0.0 {
        return Err(Error::Coverage(format!("time path must start at 0, starts at {}", path.coords[0])));
    }
    let k = path.lag(eps)?;
    let n = path.node(t)?;
    if n + k >= path.coords.len() {
        return Err(Error::Coverage(format!("path must extend to t + eps = {}", t + eps)));
    }
    Ok((n, k))
}

pub(crate) fn spatial_pqc_with(path: &Path, f: &dyn Fn(f64) -> f64, x: f64, delta: f64) -> Result<f64> {
    let (lo, hi, k) = spatial_window(path, x, delta)?;
    let w = path.values;
    let g: Vec<f64> = (lo..=hi)
        .map(|i| (f(w[i + k]) - f(w[i])) * (w[i + k] - w[i]))
        .collect();
    Ok(trapezoid_uniform(&g, path.step) / (k as f64 * path.step))
}

/// `(1/δ) ∫_{I_x} (f(W_{y+δ}) - f(W_y)) (W_{y+δ} - W_y) dy`, trapezoid in `y`.
pub fn spatial_pqc(path: &Path, f: &TestFunction, x: f64, delta: f64) -> Result<f64> {
    spatial_pqc_with(path, &|v| f.eval(v), x, delta)
}

/// `(1/δ) ∫_{I_x} (W_{y+δ} - W_y)² dy`.
pub fn spatial_qv(path: &Path, x: f64, delta: f64) -> Result<f64> {
    spatial_pqc_with(path, &|v| v, x, delta)
}

/// Per-path limit of the spatial covariation: `∫_{I_x} f'(W_y) dy`.
pub fn spatial_pqc_reference(path: &Path, f: &TestFunction, x: f64) -> Result<f64> {
    let d = f.deriv()?;
    let lo = path.node(x.min(0.0))?;
    let hi = path.node(x.max(0.0))?;
    let g: Vec<f64> = path.values[lo..=hi].iter().map(|&w| d(w)).collect();
    Ok(trapezoid_uniform(&g, path.step))
}

pub(crate) fn sqrt_abscissa(path: &Path, n: usize) -> Vec<f64> {
    path.coords[..=n].iter().map(|s| s.sqrt()).collect()
}

pub(crate) fn temporal_pqc_with(path: &Path, f: &dyn Fn(f64) -> f64, t: f64, eps: f64) -> Result<f64> {
    let (n, k) = temporal_window(path, t, eps)?;
    if n == 0 {
        return Ok(0.0);
    }
    let b = path.values;
    let g: Vec<f64> = (0..=n)
        .map(|i| (f(b[i + k]) - f(b[i])) * (b[i + k] - b[i]))
        .collect();
    let v = sqrt_abscissa(path, n);
    Ok(trapezoid(&v, &g) / (k as f64 * path.step).sqrt())
}

/// `(1/√ε) ∫_0^t (f(B_{s+ε}) - f(B_s)) (B_{s+ε} - B_s) d√s`, trapezoid in `v = √s`.
pub fn temporal_pqc(path: &Path, f: &TestFunction, t: f64, eps: f64) -> Result<f64> {
    temporal_pqc_with(path, &|v| f.eval(v), t, eps)
}

/// `(1/√ε) ∫_0^t (B_{s+ε} - B_s)² d√s`.
pub fn temporal_qv(path: &Path, t: f64, eps: f64) -> Result<f64> {
    temporal_pqc_with(path, &|v| v, t, eps)
}

/// Per-path limit of the temporal covariation: `∫_0^t f'(B_s) ds / √(2πs)`.
pub fn temporal_pqc_reference(path: &Path, f: &TestFunction, t: f64) -> Result<f64> {
    let d = f.deriv()?;
    temporal_weighted_integral(path, &|v| d(v), t).map(|v| v * (2.0 / PI).sqrt())
}

/// `∫_0^t g(B_s) d√s`, trapezoid in `√s`.
pub(crate) fn temporal_weighted_integral(path: &Path, g: &dyn Fn(f64) -> f64, t: f64) -> Result<f64> {
    if path.coords[0] != 0.0 {
        return Err(Error::Coverage(format!("time path must start at 0, starts at {}", path.coords[0])));
    }
    let n = path.node(t)?;
    let vals: Vec<f64> = path.values[..=n].iter().map(|&b| g(b)).collect();
    Ok(trapezoid(&sqrt_abscissa(path, n), &vals))
}

pub(crate) fn forward_space_with(path: &Path, f: &dyn Fn(f64) -> f64, x: f64, delta: f64) -> Result<f64> {
    let (lo, hi, k) = spatial_window(path, x, delta)?;
    let w = path.values;
    let g: Vec<f64> = (lo..=hi).map(|i| f(w[i]) * (w[i + k] - w[i])).collect();
    Ok(trapezoid_uniform(&g, path.step) / (k as f64 * path.step))
}

/// Regularized forward integral `(1/δ) ∫_{I_x} f(W_y) (W_{y+δ} - W_y) dy`.
pub fn forward_integral_space(path: &Path, f: &TestFunction, x: f64, delta: f64) -> Result<f64> {
    forward_space_with(path, &|v| f.eval(v), x, delta)
}

#[cfg(test)]
mod tests {
    use super::super::functions::registry;
    use super::*;

    fn axis(n: usize, h: f64) -> Vec<f64> {
        (0..n).map(|i| i as f64 * h).collect()
    }

    #[test]
    fn identity_matches_qv_bitwise() {
        let c = axis(129, 1.0 / 64.0);
        let v: Vec<f64> = c.iter().map(|x| (7.0 * x).sin() + x * x).collect();
        let p = Path::new(&c, &v).unwrap();
        let id = registry::identity();
        assert_eq!(spatial_pqc(&p, &id, 1.0, 0.125).unwrap().to_bits(), spatial_qv(&p, 1.0, 0.125).unwrap().to_bits());
        assert_eq!(temporal_pqc(&p, &id, 1.0, 0.125).unwrap().to_bits(), temporal_qv(&p, 1.0, 0.125).unwrap().to_bits());
    }

    #[test]
    fn constant_gives_zero() {
        let c = axis(65, 1.0 / 32.0);
        let v: Vec<f64> = c.iter().map(|x| x.cos()).collect();
        let p = Path::new(&c, &v).unwrap();
        let f = registry::constant(3.0);
        assert_eq!(spatial_pqc(&p, &f, 1.0, 0.0625).unwrap(), 0.0);
        assert_eq!(temporal_pqc(&p, &f, 1.0, 0.0625).unwrap(), 0.0);
    }

    #[test]
    fn zero_extent_and_zero_path() {
        let c = axis(65, 1.0 / 32.0);
        let v: Vec<f64> = c.iter().map(|x| x.cos()).collect();
        let p = Path::new(&c, &v).unwrap();
        assert_eq!(spatial_qv(&p, 0.0, 0.0625).unwrap(), 0.0);
        assert_eq!(temporal_qv(&p, 0.0, 0.0625).unwrap(), 0.0);
        let z = vec![0.0; 65];
        let p = Path::new(&c, &z).unwrap();
        assert_eq!(spatial_qv(&p, 1.0, 0.0625).unwrap(), 0.0);
        assert_eq!(forward_integral_space(&p, &registry::sin(), 1.0, 0.0625).unwrap(), 0.0);
    }

    #[test]
    fn linear_path_has_exact_qv() {
        // W_y = y gives (1/δ) ∫_0^x δ² dy = x δ.
        let c = axis(129, 1.0 / 64.0);
        let p = Path::new(&c, &c).unwrap();
        let q = spatial_qv(&p, 1.0, 0.25).unwrap();
        assert!((q - 0.25).abs() < 1e-14);
    }

    #[test]
    fn coverage_and_resolution_errors() {
        let c = axis(65, 1.0 / 64.0);
        let v = vec![0.0; 65];
        let p = Path::new(&c, &v).unwrap();
        assert!(matches!(spatial_qv(&p, 1.0, 0.125), Err(Error::Coverage(_))));
        assert!(matches!(spatial_qv(&p, 0.5, 1.0 / 64.0), Err(Error::Domain(_))));
        assert!(matches!(spatial_qv(&p, 0.5, 0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn negative_x_uses_mirrored_interval() {
        let c: Vec<f64> = (0..=128).map(|i| -1.0 + i as f64 / 64.0).collect();
        let v: Vec<f64> = c.iter().map(|x| x * x).collect();
        let p = Path::new(&c, &v).unwrap();
        let q = spatial_qv(&p, -0.5, 0.0625).unwrap();
        assert!(q > 0.0);
        let r = spatial_pqc_reference(&p, &registry::square(), -0.5).unwrap();
        // ∫_{-0.5}^0 2y² dy = 1/12
        assert!((r - 1.0 / 12.0).abs() < 1e-3);
    }

    #[test]
    fn telescoping_for_constant_integrand() {
        let c = axis(257, 1.0 / 128.0);
        let v: Vec<f64> = c.iter().map(|x| (3.0 * x).sin()).collect();
        let p = Path::new(&c, &v).unwrap();
        let f = registry::constant(2.0);
        let fw = forward_integral_space(&p, &f, 1.0, 1.0 / 64.0).unwrap();
        // (1/δ)(∫_1^{1+δ} W - ∫_0^δ W) ≈ W(1 + δ/2) - W(δ/2)
        let h: f64 = 1.0 / 128.0;
        let exact = 2.0 * ((3.0 * (1.0 + h)).sin() - (3.0 * h).sin());
        assert!((fw - exact).abs() < 1e-3, "{fw} vs {exact}");
    }
}
