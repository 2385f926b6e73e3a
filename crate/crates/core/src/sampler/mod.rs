//! Exact Gaussian sampling of `u` on a lattice, and slices of the samples.

mod factor;
pub mod fd;
pub mod io;

use std::borrow::Cow;
use std::collections::HashMap;
use std::sync::Arc;

use faer::linalg::matmul::triangular::{matmul, BlockStructure};
use faer::{Accum, Mat, Par};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

pub use factor::{factor_in_place, factor_psd, PsdFactor, SamplerConfig};

use crate::error::{Error, Result};
use crate::grid::FieldGrid;
use crate::kernels::{cov_spacetime, cov_time_unchecked, CovQuery};
use crate::quad::QuadratureConfig;
use crate::rng::replicate_rng;

/// One realization of `u` on a grid, stored row-major by time.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    grid: Arc<FieldGrid>,
    values: Vec<f64>,
    seed: u64,
    replicate: u64,
}

impl FieldSample {
    pub fn new(grid: Arc<FieldGrid>, values: Vec<f64>, seed: u64, replicate: u64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Format(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Format(format!("non-finite field value {bad}")));
        }
        Ok(Self { grid, values, seed, replicate })
    }

    pub fn grid(&self) -> &Arc<FieldGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replicate(&self) -> u64 {
        self.replicate
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// `x ↦ u(times[t_index], x)` over all space points.
    pub fn slice_space(&self, t_index: usize) -> Result<&[f64]> {
        let (nt, nx) = (self.grid.nt(), self.grid.nx());
        if t_index >= nt {
            return Err(Error::Index { index: t_index, len: nt });
        }
        Ok(&self.values[t_index * nx..(t_index + 1) * nx])
    }

    /// `t ↦ u(t, spaces[x_index])` over all time points. Borrowed when the grid
    /// has a single space column, gathered otherwise.
    pub fn slice_time(&self, x_index: usize) -> Result<Cow<'_, [f64]>> {
        let nx = self.grid.nx();
        if x_index >= nx {
            return Err(Error::Index { index: x_index, len: nx });
        }
        if nx == 1 {
            return Ok(Cow::Borrowed(&self.values));
        }
        Ok(Cow::Owned(self.values.iter().skip(x_index).step_by(nx).copied().collect()))
    }
}

fn check_capacity(grid: &FieldGrid, cfg: &SamplerConfig) -> Result<()> {
    let capacity = if grid.is_slice() { cfg.max_slice_points } else { cfg.max_points };
    if grid.len() > capacity {
        return Err(Error::Capacity { points: grid.len(), capacity });
    }
    Ok(())
}

/// Covariance between the grid points listed in `points` (flat indices).
///
/// Spatial separations are keyed by index offset on uniform space axes, so each
/// distinct `(t, t', |x - x'|)` triple is integrated once.
fn covariance_of(grid: &FieldGrid, points: &[usize], quad: &QuadratureConfig) -> Result<Mat<f64>> {
    let nt = grid.nt();
    let nx = grid.nx();
    let times = grid.times();
    let xs = grid.spaces();
    let uniform_dx = grid.uniform_dx();

    let mut dist_keys: HashMap<u64, usize> = HashMap::new();
    let mut dists: Vec<f64> = Vec::new();
    let mut dist_index = vec![u32::MAX; nx * nx];
    for j in 0..nx {
        for k in 0..nx {
            let (key, d) = match uniform_dx {
                Some(h) => {
                    let off = j.abs_diff(k);
                    (off as u64, off as f64 * h)
                }
                None => {
                    let d = (xs[j] - xs[k]).abs();
                    (d.to_bits(), d)
                }
            };
            if d == 0.0 {
                continue;
            }
            let next = dists.len();
            let idx = *dist_keys.entry(key).or_insert_with(|| {
                dists.push(d);
                next
            });
            dist_index[j * nx + k] = idx as u32;
        }
    }

    // Off-diagonal spatial covariances for every unordered time pair.
    let pair = |a: usize, b: usize| {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        hi * (hi + 1) / 2 + lo
    };
    let nd = dists.len();
    let table: Vec<f64> = if nd == 0 {
        Vec::new()
    } else {
        let jobs: Vec<(usize, usize, usize)> = (0..nt)
            .flat_map(|b| (0..=b).map(move |a| (a, b)))
            .flat_map(|(a, b)| (0..nd).map(move |d| (a, b, d)))
            .collect();
        jobs.par_iter()
            .map(|&(a, b, d)| {
                let q = CovQuery::new(times[b], 0.0, times[a], dists[d])?;
                Ok(cov_spacetime(&q, quad)?.value)
            })
            .collect::<Result<Vec<f64>>>()?
    };

    let n = points.len();
    Ok(Mat::<f64>::from_fn(n, n, |p, q| {
        let (i, j) = (points[p] / nx, points[p] % nx);
        let (k, l) = (points[q] / nx, points[q] % nx);
        let di = dist_index[j * nx + l];
        if di == u32::MAX {
            cov_time_unchecked(times[i], times[k])
        } else {
            table[pair(i, k) * nd + di as usize]
        }
    }))
}

/// Dense covariance matrix of all grid points, in row-major point order.
pub fn build_covariance(grid: &FieldGrid, quad: &QuadratureConfig, cfg: &SamplerConfig) -> Result<Mat<f64>> {
    check_capacity(grid, cfg)?;
    let points: Vec<usize> = (0..grid.len()).collect();
    covariance_of(grid, &points, quad)
}

/// Replicates are pushed through the factor in blocks of this many columns.
/// Keeping the block shape fixed makes each replicate's values independent of
/// how many replicates are requested.
const BLOCK: usize = 16;

/// Exact sampler for one grid: the covariance factor plus the grid it belongs to.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    grid: Arc<FieldGrid>,
    factor: Arc<PsdFactor>,
}

impl GaussianSampler {
    /// Build and factor the covariance of the points with `t > 0`.
    pub fn new(grid: Arc<FieldGrid>, quad: &QuadratureConfig, cfg: &SamplerConfig) -> Result<Self> {
        check_capacity(&grid, cfg)?;
        let active: Vec<usize> = (0..grid.len()).filter(|&p| grid.point(p).0 > 0.0).collect();
        let factor = factor_in_place(|| covariance_of(&grid, &active, quad), active.clone(), grid.len(), cfg)?;
        if factor.jitter > 0.0 {
            log::info!(
                "covariance of {} points factored with relative jitter {:e}",
                factor.active.len(),
                factor.jitter
            );
        }
        Ok(Self { grid, factor: Arc::new(factor) })
    }

    pub fn grid(&self) -> &Arc<FieldGrid> {
        &self.grid
    }

    pub fn factor(&self) -> &PsdFactor {
        &self.factor
    }

    /// Replicates `range` under `seed`; replicate `k` depends only on `(seed, k)`.
    pub fn sample_range(&self, range: std::ops::Range<u64>, seed: u64) -> Result<Vec<FieldSample>> {
        if range.is_empty() {
            return Ok(Vec::new());
        }
        let first_block = range.start / BLOCK as u64;
        let last_block = (range.end - 1) / BLOCK as u64;
        let blocks: Vec<Vec<FieldSample>> = (first_block..=last_block)
            .into_par_iter()
            .map(|b| {
                let lo = (b * BLOCK as u64).max(range.start);
                let hi = ((b + 1) * BLOCK as u64).min(range.end);
                self.sample_block(b, lo..hi, seed)
            })
            .collect::<Result<_>>()?;
        Ok(blocks.into_iter().flatten().collect())
    }

    /// Replicates `0..n`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<FieldSample>> {
        self.sample_range(0..n as u64, seed)
    }

    fn sample_block(&self, block: u64, wanted: std::ops::Range<u64>, seed: u64) -> Result<Vec<FieldSample>> {
        let na = self.factor.active.len();
        let base = block * BLOCK as u64;
        let mut z = Mat::<f64>::zeros(na, BLOCK);
        for k in wanted.clone() {
            let c = (k - base) as usize;
            let mut rng = replicate_rng(seed, k);
            for r in 0..na {
                z[(r, c)] = rng.sample(StandardNormal);
            }
        }
        let mut y = Mat::<f64>::zeros(na, BLOCK);
        matmul(
            y.as_mut(),
            BlockStructure::Rectangular,
            Accum::Replace,
            self.factor.lower.as_ref(),
            BlockStructure::TriangularLower,
            z.as_ref(),
            BlockStructure::Rectangular,
            1.0,
            Par::Seq,
        );
        wanted
            .map(|k| {
                let c = (k - base) as usize;
                let mut values = vec![0.0; self.grid.len()];
                for (r, &p) in self.factor.active.iter().enumerate() {
                    values[p] = y[(r, c)];
                }
                FieldSample::new(self.grid.clone(), values, seed, k)
            })
            .collect()
    }
}

/// Build, factor and sample in one call.
pub fn sample_field(
    grid: &FieldGrid,
    n: usize,
    seed: u64,
    quad: &QuadratureConfig,
    cfg: &SamplerConfig,
) -> Result<Vec<FieldSample>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    GaussianSampler::new(Arc::new(grid.clone()), quad, cfg)?.sample(n, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_covariance() {
        let g = FieldGrid::new(vec![2.0], vec![0.3]).unwrap();
        let m = build_covariance(&g, &QuadratureConfig::default(), &SamplerConfig::default()).unwrap();
        assert_eq!(m[(0, 0)], (2.0 / std::f64::consts::PI).sqrt());
    }

    #[test]
    fn capacity_is_enforced() {
        let g = FieldGrid::new(FieldGrid::linspace(0.0, 1.0, 99), FieldGrid::linspace(0.0, 1.0, 99)).unwrap();
        let err = build_covariance(&g, &QuadratureConfig::default(), &SamplerConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Capacity { points: 10_000, capacity: 8192 }));
    }

    #[test]
    fn zero_replicates_is_empty() {
        let g = FieldGrid::new(vec![1.0], vec![0.0]).unwrap();
        let v = sample_field(&g, 0, 1, &QuadratureConfig::default(), &SamplerConfig::default()).unwrap();
        assert!(v.is_empty());
    }

    #[test]
    fn slices_share_points() {
        let g = FieldGrid::new(vec![0.0, 0.5, 1.0], vec![0.0, 0.5]).unwrap();
        let s = sample_field(&g, 1, 3, &QuadratureConfig::default(), &SamplerConfig::default()).unwrap();
        let s = &s[0];
        assert!(s.slice_space(0).unwrap().iter().all(|&v| v == 0.0));
        assert_eq!(s.slice_time(1).unwrap()[2], s.slice_space(2).unwrap()[1]);
        assert_eq!(s.slice_time(0).unwrap().len(), 3);
        assert_eq!(s.slice_space(1).unwrap().len(), 2);
        assert!(s.slice_space(3).is_err());
        assert!(s.slice_time(2).is_err());
    }
}
