//! Crank–Nicolson integrator on a truncated interval, used as an independent
//! distributional oracle for the exact sampler.
//!
//! The scheme on interior mesh points `x_m = -L + m·dx`, `m = 1..=M`, with zero
//! Dirichlet boundary is
//!
//! `(I - dt/4 A) u^{n+1} = (I + dt/4 A) u^n + √(dt/dx) Z^n`,
//!
//! where `A` is the second-difference operator and `Z^n` is i.i.d. standard
//! normal per cell. Two evaluation methods are offered: direct stepping, and an
//! exact-in-law aggregation in the sine eigenbasis of `A` that jumps straight
//! between output times.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::FieldSample;
use crate::error::{Error, Result};
use crate::grid::FieldGrid;
use crate::numeric::grid_index;
use crate::rng::replicate_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FdMethod {
    /// Step the tridiagonal system one `dt` at a time.
    Stepping,
    /// Propagate each eigenmode between output times in one exact AR(1) draw.
    Modal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdConfig {
    pub dx: f64,
    pub dt: f64,
    /// Truncated domain is `[-half_width, half_width]`.
    pub half_width: f64,
    pub method: FdMethod,
    /// Multiplier on the noise; zero yields the deterministic (zero) solution.
    pub noise_scale: f64,
}

impl FdConfig {
    pub fn new(dx: f64, dt: f64, half_width: f64, method: FdMethod) -> Self {
        Self { dx, dt, half_width, method, noise_scale: 1.0 }
    }

    /// Interior mesh size `M`.
    pub fn interior(&self) -> usize {
        (2.0 * self.half_width / self.dx).round() as usize - 1
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dx > 0.0 && self.dt > 0.0 && self.half_width > 0.0) {
            return Err(Error::Config(format!(
                "dx, dt and half_width must be positive (dx={}, dt={}, L={})",
                self.dx, self.dt, self.half_width
            )));
        }
        if self.dt > self.dx * self.dx * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "dt = {:e} exceeds dx² = {:e}",
                self.dt,
                self.dx * self.dx
            )));
        }
        let cells = 2.0 * self.half_width / self.dx;
        if (cells - cells.round()).abs() > 1e-9 * cells || cells.round() < 2.0 {
            return Err(Error::Config(format!(
                "2L/dx = {cells} must be an integer >= 2"
            )));
        }
        if !self.noise_scale.is_finite() {
            return Err(Error::Config("noise_scale must be finite".into()));
        }
        Ok(())
    }
}

struct Layout {
    /// Step count at each output time.
    steps: Vec<usize>,
    /// Interior mesh index (0-based) of each output space point.
    cells: Vec<usize>,
}

fn step_count(cfg: &FdConfig, t: f64) -> Result<usize> {
    grid_index(0.0, cfg.dt, t)
        .ok_or_else(|| Error::Config(format!("output time {t} is not a multiple of dt = {}", cfg.dt)))
}

fn mesh_cell(cfg: &FdConfig, x: f64) -> Result<usize> {
    let idx = grid_index(-cfg.half_width, cfg.dx, x)
        .ok_or_else(|| Error::Config(format!("output point {x} is not on the mesh")))?;
    if idx == 0 || idx > cfg.interior() {
        return Err(Error::Config(format!("output point {x} is not inside (-L, L)")));
    }
    Ok(idx - 1)
}

fn layout(grid: &FieldGrid, cfg: &FdConfig) -> Result<Layout> {
    let steps = grid.times().iter().map(|&t| step_count(cfg, t)).collect::<Result<Vec<_>>>()?;
    let cells = grid.spaces().iter().map(|&x| mesh_cell(cfg, x)).collect::<Result<Vec<_>>>()?;
    Ok(Layout { steps, cells })
}

/// Integrate `n` independent replicates and record them on `grid`.
pub fn fd_integrate(grid: &FieldGrid, cfg: &FdConfig, n: usize, seed: u64) -> Result<Vec<FieldSample>> {
    cfg.validate()?;
    let lay = layout(grid, cfg)?;
    let shared = Arc::new(grid.clone());
    let modes = (cfg.method == FdMethod::Modal).then(|| Modes::new(cfg, &lay.cells));
    (0..n as u64)
        .into_par_iter()
        .map(|k| {
            let values = match &modes {
                None => stepping(cfg, &lay, seed, k),
                Some(modes) => modal(cfg, &lay, modes, seed, k),
            };
            FieldSample::new(shared.clone(), values, seed, k)
        })
        .collect()
}

/// Solve the constant tridiagonal system `(1 + 2c) u_m - c (u_{m-1} + u_{m+1}) = rhs_m`
/// in place with the Thomas algorithm.
fn thomas(c: f64, rhs: &mut [f64], scratch: &mut [f64]) {
    let n = rhs.len();
    let diag = 1.0 + 2.0 * c;
    let off = -c;
    scratch[0] = off / diag;
    rhs[0] /= diag;
    for i in 1..n {
        let denom = diag - off * scratch[i - 1];
        scratch[i] = off / denom;
        rhs[i] = (rhs[i] - off * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i] * rhs[i + 1];
    }
}

fn step_with_noise(cfg: &FdConfig, u: &mut [f64], noise: &[f64], rhs: &mut [f64], scratch: &mut [f64]) {
    let m = u.len();
    let c = cfg.dt / (4.0 * cfg.dx * cfg.dx);
    let amp = cfg.noise_scale * (cfg.dt / cfg.dx).sqrt();
    for i in 0..m {
        let left = if i > 0 { u[i - 1] } else { 0.0 };
        let right = if i + 1 < m { u[i + 1] } else { 0.0 };
        rhs[i] = u[i] + c * (left - 2.0 * u[i] + right) + amp * noise[i];
    }
    thomas(c, rhs, scratch);
    u.copy_from_slice(rhs);
}

fn stepping(cfg: &FdConfig, lay: &Layout, seed: u64, k: u64) -> Vec<f64> {
    let m = cfg.interior();
    let nx = lay.cells.len();
    let mut rng = replicate_rng(seed, k);
    let mut u = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    let mut scratch = vec![0.0; m];
    let mut noise = vec![0.0; m];
    let mut out = vec![0.0; lay.steps.len() * nx];
    let mut done = 0;
    for (row, &target) in lay.steps.iter().enumerate() {
        while done < target {
            for z in noise.iter_mut() {
                *z = rng.sample(StandardNormal);
            }
            step_with_noise(cfg, &mut u, &noise, &mut rhs, &mut scratch);
            done += 1;
        }
        for (col, &cell) in lay.cells.iter().enumerate() {
            out[row * nx + col] = u[cell];
        }
    }
    out
}

/// Sine eigenbasis of the discrete Laplacian and the per-step CN recursion
/// `a_k ← ρ_k a_k + g_k ξ_k`.
struct Modes {
    rho: Vec<f64>,
    gain: Vec<f64>,
    /// `basis[col * M + k]` = eigenvector `k` evaluated at output cell `col`.
    basis: Vec<f64>,
}

impl Modes {
    fn new(cfg: &FdConfig, cells: &[usize]) -> Self {
        let m = cfg.interior();
        let mp1 = (m + 1) as f64;
        let mut rho = Vec::with_capacity(m);
        let mut gain = Vec::with_capacity(m);
        for k in 1..=m {
            let s = (PI * k as f64 / (2.0 * mp1)).sin();
            let lambda = -4.0 / (cfg.dx * cfg.dx) * s * s;
            let c = cfg.dt * lambda / 4.0;
            rho.push((1.0 + c) / (1.0 - c));
            gain.push(cfg.noise_scale * (cfg.dt / cfg.dx).sqrt() / (1.0 - c));
        }
        let norm = (2.0 / mp1).sqrt();
        let mut basis = Vec::with_capacity(cells.len() * m);
        for &cell in cells {
            let pos = (cell + 1) as f64;
            for k in 1..=m {
                basis.push(norm * (PI * k as f64 * pos / mp1).sin());
            }
        }
        Self { rho, gain, basis }
    }
}

fn modal(cfg: &FdConfig, lay: &Layout, modes: &Modes, seed: u64, k: u64) -> Vec<f64> {
    let m = cfg.interior();
    let nx = lay.cells.len();
    let mut rng = replicate_rng(seed, k);
    let mut a = vec![0.0; m];
    let mut out = vec![0.0; lay.steps.len() * nx];
    let mut done = 0;
    for (row, &target) in lay.steps.iter().enumerate() {
        let jump = (target - done) as i32;
        if jump > 0 {
            for ((ai, &rho), &gain) in a.iter_mut().zip(&modes.rho).zip(&modes.gain) {
                let rho_n = rho.powi(jump);
                let var = gain * gain * (1.0 - rho_n * rho_n) / (1.0 - rho * rho);
                let z: f64 = rng.sample(StandardNormal);
                *ai = rho_n * *ai + var.sqrt() * z;
            }
            done = target;
        }
        for col in 0..nx {
            let phi = &modes.basis[col * m..(col + 1) * m];
            out[row * nx + col] = crate::numeric::pairwise_sum(
                &phi.iter().zip(&a).map(|(p, v)| p * v).collect::<Vec<_>>(),
            );
        }
    }
    out
}

/// Exact covariance of the scheme between the mesh outputs `(t1, x1)` and `(t2, x2)`.
pub fn fd_covariance(cfg: &FdConfig, t1: f64, x1: f64, t2: f64, x2: f64) -> Result<f64> {
    cfg.validate()?;
    let (n1, n2) = (step_count(cfg, t1)?, step_count(cfg, t2)?);
    let (c1, c2) = (mesh_cell(cfg, x1)?, mesh_cell(cfg, x2)?);
    let early = n1.min(n2) as i32;
    let lag = n1.abs_diff(n2) as i32;
    let modes = Modes::new(cfg, &[c1, c2]);
    let m = cfg.interior();
    let terms: Vec<f64> = (0..m)
        .map(|i| {
            let rho = modes.rho[i];
            let var_early = modes.gain[i].powi(2) * (1.0 - rho.powi(2 * early)) / (1.0 - rho * rho);
            modes.basis[i] * modes.basis[m + i] * rho.powi(lag) * var_early
        })
        .collect();
    Ok(crate::numeric::pairwise_sum(&terms))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stability_guard() {
        let g = FieldGrid::new(vec![0.5], vec![0.0]).unwrap();
        let cfg = FdConfig::new(0.1, 0.02, 1.0, FdMethod::Stepping);
        assert!(matches!(fd_integrate(&g, &cfg, 1, 0), Err(Error::Config(_))));
    }

    #[test]
    fn zero_noise_gives_zero_field() {
        let g = FieldGrid::new(vec![0.0, 0.04, 0.08], vec![-0.2, 0.0, 0.2]).unwrap();
        for method in [FdMethod::Stepping, FdMethod::Modal] {
            let mut cfg = FdConfig::new(0.1, 0.01, 1.0, method);
            cfg.noise_scale = 0.0;
            let s = fd_integrate(&g, &cfg, 3, 9).unwrap();
            assert!(s.iter().all(|f| f.values().iter().all(|&v| v == 0.0)));
        }
    }

    #[test]
    fn off_mesh_output_rejected() {
        let g = FieldGrid::new(vec![0.015], vec![0.0]).unwrap();
        let cfg = FdConfig::new(0.1, 0.01, 1.0, FdMethod::Modal);
        assert!(fd_integrate(&g, &cfg, 1, 0).is_err());
        let g = FieldGrid::new(vec![0.01], vec![0.05]).unwrap();
        assert!(fd_integrate(&g, &cfg, 1, 0).is_err());
        let g = FieldGrid::new(vec![0.01], vec![1.0]).unwrap();
        assert!(fd_integrate(&g, &cfg, 1, 0).is_err());
    }

    /// Stepping and per-step modal propagation agree path by path when the
    /// modal noise is the basis transform of the cell noise.
    #[test]
    fn modal_recursion_matches_stepping_pathwise() {
        let cfg = FdConfig::new(0.125, 0.01, 1.0, FdMethod::Stepping);
        let m = cfg.interior();
        let cells: Vec<usize> = (0..m).collect();
        let modes = Modes::new(&cfg, &cells);
        let mut rng = replicate_rng(5, 0);
        let mut u = vec![0.0; m];
        let mut a = vec![0.0; m];
        let (mut rhs, mut scratch) = (vec![0.0; m], vec![0.0; m]);
        for _ in 0..40 {
            let z: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
            step_with_noise(&cfg, &mut u, &z, &mut rhs, &mut scratch);
            for k in 0..m {
                let xi: f64 = (0..m).map(|c| modes.basis[c * m + k] * z[c]).sum();
                a[k] = modes.rho[k] * a[k] + modes.gain[k] * xi;
            }
        }
        for c in 0..m {
            let v: f64 = (0..m).map(|k| modes.basis[c * m + k] * a[k]).sum();
            assert!((v - u[c]).abs() < 1e-12, "cell {c}: {v} vs {}", u[c]);
        }
    }

    #[test]
    fn scheme_covariance_is_symmetric() {
        let cfg = FdConfig::new(0.0625, 0.0625 * 0.0625, 4.0, FdMethod::Modal);
        let a = fd_covariance(&cfg, 0.5, 0.0, 0.25, 0.5).unwrap();
        let b = fd_covariance(&cfg, 0.25, 0.5, 0.5, 0.0).unwrap();
        assert!((a - b).abs() < 1e-15);
    }
}
