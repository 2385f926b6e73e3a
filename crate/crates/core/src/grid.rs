//! Rectangular time × space lattices.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numeric::uniform_step;

/// A time × space lattice. Values on it are stored row-major by time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    times: Vec<f64>,
    spaces: Vec<f64>,
    dt: f64,
    dx: f64,
}

fn check_axis(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Config(format!("{name} axis is empty")));
    }
    if let Some(bad) = v.iter().find(|c| !c.is_finite()) {
        return Err(Error::Config(format!("{name} axis holds non-finite value {bad}")));
    }
    if let Some(w) = v.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!(
            "{name} axis must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

fn nominal_step(v: &[f64]) -> f64 {
    if v.len() < 2 {
        0.0
    } else {
        (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64
    }
}

impl FieldGrid {
    pub fn new(times: Vec<f64>, spaces: Vec<f64>) -> Result<Self> {
        check_axis("time", &times)?;
        check_axis("space", &spaces)?;
        if times[0] < 0.0 {
            return Err(Error::Config(format!("times must be >= 0, got {}", times[0])));
        }
        let dt = nominal_step(&times);
        let dx = nominal_step(&spaces);
        Ok(Self { times, spaces, dt, dx })
    }

    /// `steps + 1` equally spaced points from `start` to `end` inclusive.
    pub fn linspace(start: f64, end: f64, steps: usize) -> Vec<f64> {
        if steps == 0 {
            return vec![start];
        }
        let h = (end - start) / steps as f64;
        (0..=steps).map(|i| start + i as f64 * h).collect()
    }

    /// Grid with a single time row.
    pub fn space_slice(t: f64, spaces: Vec<f64>) -> Result<Self> {
        Self::new(vec![t], spaces)
    }

    /// Grid with a single space column.
    pub fn time_slice(times: Vec<f64>, x: f64) -> Result<Self> {
        Self::new(times, vec![x])
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn spaces(&self) -> &[f64] {
        &self.spaces
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn nt(&self) -> usize {
        self.times.len()
    }

    pub fn nx(&self) -> usize {
        self.spaces.len()
    }

    /// Number of joint `(t, x)` points.
    pub fn len(&self) -> usize {
        self.times.len() * self.spaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_slice(&self) -> bool {
        self.nt() == 1 || self.nx() == 1
    }

    /// Row-major flat index.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.nx() + j
    }

    /// `(t, x)` of a flat index.
    pub fn point(&self, flat: usize) -> (f64, f64) {
        (self.times[flat / self.nx()], self.spaces[flat % self.nx()])
    }

    pub fn uniform_dt(&self) -> Option<f64> {
        uniform_step(&self.times)
    }

    pub fn uniform_dx(&self) -> Option<f64> {
        uniform_step(&self.spaces)
    }

    /// Stable digest of the coordinates, used as a cache key.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.times.len() as u64).to_le_bytes());
        for t in &self.times {
            h.update(t.to_le_bytes());
        }
        h.update((self.spaces.len() as u64).to_le_bytes());
        for x in &self.spaces {
            h.update(x.to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn into_shared(self) -> Arc<Self> {
        Arc::new(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unordered_axes() {
        assert!(FieldGrid::new(vec![0.0, 0.0], vec![0.0]).is_err());
        assert!(FieldGrid::new(vec![-1.0], vec![0.0]).is_err());
        assert!(FieldGrid::new(vec![1.0], vec![]).is_err());
    }

    #[test]
    fn steps_and_indices() {
        let g = FieldGrid::new(FieldGrid::linspace(0.0, 1.0, 4), FieldGrid::linspace(-1.0, 1.0, 8)).unwrap();
        assert_eq!(g.len(), 45);
        assert!((g.dt() - 0.25).abs() < 1e-15);
        assert!((g.dx() - 0.25).abs() < 1e-15);
        assert_eq!(g.point(g.index(2, 3)), (0.5, -0.25));
        assert_eq!(g.fingerprint(), g.clone().fingerprint());
    }
}
