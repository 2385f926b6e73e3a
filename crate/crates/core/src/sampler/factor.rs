//! Jittered Cholesky factorization of covariance matrices.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::llt::factor::{cholesky_in_place, cholesky_in_place_scratch, LltRegularization};
use faer::{Mat, Par};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Retry policy for factorizing covariance matrices that are PSD only up to rounding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// First relative diagonal boost tried after a failed plain factorization.
    pub jitter_start: f64,
    /// Multiplier applied to the boost on every retry.
    pub jitter_growth: f64,
    pub max_retries: usize,
    /// Capacity for joint time × space grids.
    pub max_points: usize,
    /// Capacity for single-time or single-space slices.
    pub max_slice_points: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            jitter_start: 1e-14,
            jitter_growth: 10.0,
            max_retries: 8,
            max_points: 8192,
            max_slice_points: 20_000,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.jitter_start > 0.0 && self.jitter_start.is_finite()) {
            return Err(Error::Config(format!("jitter_start must be > 0, got {}", self.jitter_start)));
        }
        if !(self.jitter_growth > 1.0 && self.jitter_growth.is_finite()) {
            return Err(Error::Config(format!("jitter_growth must be > 1, got {}", self.jitter_growth)));
        }
        Ok(())
    }
}

/// Lower-triangular factor of the non-degenerate part of a covariance matrix.
#[derive(Debug, Clone)]
pub struct PsdFactor {
    /// Factor restricted to `active` rows and columns.
    pub lower: Mat<f64>,
    /// Rows of the original matrix that carry variance; the rest are identically zero.
    pub active: Vec<usize>,
    pub dim: usize,
    /// Relative diagonal boost that made the factorization succeed (0 if none was needed).
    pub jitter: f64,
    pub retries: usize,
}

impl PsdFactor {
    /// Reconstruct `L Lᵀ` embedded back into the full dimension.
    pub fn reconstruct(&self) -> Mat<f64> {
        let n = self.active.len();
        let l = &self.lower;
        let llt = Mat::<f64>::from_fn(n, n, |i, j| {
            let mut acc = 0.0;
            for k in 0..=i.min(j) {
                acc += l[(i, k)] * l[(j, k)];
            }
            acc
        });
        let mut full = Mat::<f64>::zeros(self.dim, self.dim);
        for (a, &i) in self.active.iter().enumerate() {
            for (b, &j) in self.active.iter().enumerate() {
                full[(i, j)] = llt[(a, b)];
            }
        }
        full
    }
}

/// Factorize the matrix produced by `build`, skipping zero rows and columns.
///
/// A failed attempt leaves the matrix partly overwritten, so each retry asks
/// `build` for a fresh copy instead of holding a second dense matrix.
pub fn factor_in_place<B>(build: B, active: Vec<usize>, dim: usize, cfg: &SamplerConfig) -> Result<PsdFactor>
where
    B: Fn() -> Result<Mat<f64>>,
{
    cfg.validate()?;
    let mut m = build()?;
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Domain(format!("matrix is {}x{}, expected square", n, m.ncols())));
    }
    if n == 0 {
        return Ok(PsdFactor { lower: m, active, dim, jitter: 0.0, retries: 0 });
    }
    if let Some(bad) = (0..n).map(|i| m[(i, i)]).find(|d| !d.is_finite()) {
        return Err(Error::Domain(format!("non-finite diagonal entry {bad}")));
    }
    let mut scratch = MemBuffer::new(cholesky_in_place_scratch::<f64>(n, Par::Seq, Default::default()));
    let mut jitter = 0.0;
    let mut retries = 0;
    loop {
        let ok = cholesky_in_place(
            m.as_mut(),
            LltRegularization::default(),
            Par::Seq,
            MemStack::new(&mut scratch),
            Default::default(),
        )
        .is_ok();
        if ok && (0..n).all(|i| m[(i, i)].is_finite() && m[(i, i)] > 0.0) {
            for j in 0..n {
                for i in 0..j {
                    m[(i, j)] = 0.0;
                }
            }
            return Ok(PsdFactor { lower: m, active, dim, jitter, retries });
        }
        if retries >= cfg.max_retries {
            return Err(Error::Factorization { jitter, retries });
        }
        jitter = if jitter == 0.0 { cfg.jitter_start } else { jitter * cfg.jitter_growth };
        retries += 1;
        log::debug!("cholesky retry {retries} with relative jitter {jitter:e}");
        drop(m);
        m = build()?;
        for j in 0..n {
            m[(j, j)] *= 1.0 + jitter;
        }
    }
}

/// Factorize a symmetric PSD matrix as `L Lᵀ ≈ m + jitter·diag(m)`.
///
/// Rows whose diagonal is exactly zero (points at `t = 0`) are left out of the factor.
pub fn factor_psd(m: &Mat<f64>, cfg: &SamplerConfig) -> Result<PsdFactor> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Domain(format!("matrix is {}x{}, expected square", n, m.ncols())));
    }
    for j in 0..n {
        for i in 0..n {
            let v = m[(i, j)];
            if !v.is_finite() {
                return Err(Error::Domain(format!("non-finite entry at ({i}, {j})")));
            }
            if v != m[(j, i)] {
                return Err(Error::Domain(format!("matrix not symmetric at ({i}, {j})")));
            }
        }
    }
    let active: Vec<usize> = (0..n).filter(|&i| m[(i, i)] != 0.0).collect();
    let sub = Mat::<f64>::from_fn(active.len(), active.len(), |a, b| m[(active[a], active[b])]);
    factor_in_place(|| Ok(sub.clone()), active, n, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_needs_no_jitter() {
        let f = factor_psd(&Mat::<f64>::identity(5, 5), &SamplerConfig::default()).unwrap();
        assert_eq!(f.jitter, 0.0);
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(f.lower[(i, j)], if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn rank_one_gets_small_second_pivot() {
        let m = Mat::<f64>::from_fn(2, 2, |_, _| 1.0);
        let f = factor_psd(&m, &SamplerConfig::default()).unwrap();
        let l22 = f.lower[(1, 1)];
        // (1 + j) - 1/(1 + j) ≈ 2j
        assert!(l22 * l22 <= 2.0 * f.jitter * (1.0 + 1e-6), "{} vs {}", l22 * l22, f.jitter);
    }

    #[test]
    fn zero_rows_are_skipped() {
        let mut m = Mat::<f64>::zeros(3, 3);
        m[(1, 1)] = 4.0;
        m[(2, 2)] = 1.0;
        m[(1, 2)] = 1.0;
        m[(2, 1)] = 1.0;
        let f = factor_psd(&m, &SamplerConfig::default()).unwrap();
        assert_eq!(f.active, vec![1, 2]);
        let r = f.reconstruct();
        for i in 0..3 {
            for j in 0..3 {
                assert!((r[(i, j)] - m[(i, j)]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn asymmetric_input_rejected() {
        let mut m = Mat::<f64>::identity(2, 2);
        m[(0, 1)] = 0.5;
        assert!(factor_psd(&m, &SamplerConfig::default()).is_err());
    }

    #[test]
    fn indefinite_exhausts_retries() {
        let mut m = Mat::<f64>::identity(2, 2);
        m[(0, 1)] = 2.0;
        m[(1, 0)] = 2.0;
        let cfg = SamplerConfig { max_retries: 3, ..Default::default() };
        match factor_psd(&m, &cfg).unwrap_err() {
            Error::Factorization { retries, jitter } => {
                assert_eq!(retries, 3);
                assert!(jitter > 0.0);
            }
            e => panic!("unexpected {e:?}"),
        }
    }
}
