//! Smoothing kernels standing in for the Dirac mass in local-time estimates.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `1 / ∫_{-1}^{1} exp(1/(y² - 1)) dy`, so that `ζ` has unit mass.
pub const BUMP_NORMALIZER: f64 = 2.252_283_621_043_581_010_5;

/// Variance of `ζ` about its centre `1`: `c ∫_{-1}^{1} y² exp(1/(y² - 1)) dy`.
pub const BUMP_VARIANCE: f64 = 0.158_113_636_263_798_230_23;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// `ζ(x) = c exp(1/((x-1)² - 1))` on `(0, 2)`.
    Bump,
    /// Normal density with the mean and variance of `ζ`.
    Gaussian,
}

/// `ζ_n(x) = n ζ(n x)`, supported on `(0, 2/n)`, or its Gaussian counterpart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mollifier {
    pub n: f64,
    pub profile: Profile,
}

/// The bump `ζ` itself.
pub fn zeta(x: f64) -> f64 {
    let y = x - 1.0;
    if y.abs() >= 1.0 {
        0.0
    } else {
        BUMP_NORMALIZER * (1.0 / (y * y - 1.0)).exp()
    }
}

impl Mollifier {
    pub fn new(n: f64, profile: Profile) -> Result<Self> {
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Config(format!("mollifier sharpness must be positive, got {n}")));
        }
        Ok(Self { n, profile })
    }

    /// Mollifier whose bump support has width `h = 2/n`.
    pub fn with_bandwidth(h: f64, profile: Profile) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Config(format!("bandwidth must be positive, got {h}")));
        }
        Self::new(2.0 / h, profile)
    }

    pub fn bandwidth(&self) -> f64 {
        2.0 / self.n
    }

    /// `ζ_n(x)` as defined, with mass on `(0, 2/n)`.
    pub fn eval(&self, x: f64) -> f64 {
        self.centered(x - 1.0 / self.n)
    }

    /// The kernel shifted to mean zero: `ζ_n(u + 1/n)`.
    ///
    /// Local-time estimates use this form so the level `a` sits at the kernel's centre
    /// rather than at its left edge, which removes the first-order shift in `a`.
    pub fn centered(&self, u: f64) -> f64 {
        match self.profile {
            Profile::Bump => self.n * zeta(self.n * u + 1.0),
            Profile::Gaussian => {
                let sd = BUMP_VARIANCE.sqrt() / self.n;
                let z = u / sd;
                (-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt())
            }
        }
    }

    /// Half-width beyond which the centred kernel is zero or negligible.
    pub fn reach(&self) -> f64 {
        match self.profile {
            Profile::Bump => 1.0 / self.n,
            Profile::Gaussian => 9.0 * BUMP_VARIANCE.sqrt() / self.n,
        }
    }

    /// The smoothing must span at least four path-value steps.
    pub fn check_resolution(&self, step: f64) -> Result<()> {
        if self.bandwidth() < 4.0 * step * (1.0 - 1e-12) {
            return Err(Error::Config(format!(
                "bandwidth {:e} is below four grid steps ({:e})",
                self.bandwidth(),
                4.0 * step
            )));
        }
        Ok(())
    }
}
