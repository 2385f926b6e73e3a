//! Local times of sampled paths: occupation histograms, kernel estimates of the
//! occupation density in space and of the `ds/(2√(πs))`-weighted density in time,
//! and the Bouleau-Yor and Tanaka residuals built on them.
//!
//! Local times are written level first: `L(a, x)` and `𝓛(a, t)`.

mod identities;
mod mollifier;

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;
use crate::qcov::Path;

pub use identities::{bouleau_yor_residual, tanaka_residual_space, tanaka_residual_time, TanakaResiduals};
pub use mollifier::{zeta, Mollifier, Profile, BUMP_NORMALIZER, BUMP_VARIANCE};

/// Default number of `a`-levels in a gridded estimate.
pub const LEVELS: usize = 256;

/// Minimum number of levels across one kernel support in gridded estimates.
pub const LEVELS_PER_BANDWIDTH: f64 = 8.0;

/// Levels extend this many bandwidths beyond the path range.
const MARGIN: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightKind {
    /// Occupation density of `W` over `I_x`.
    Plain,
    /// Occupation density of `B` over `[0, t]` under `ds / (2√(πs))`.
    SqrtTimeWeighted,
}

impl WeightKind {
    fn label(self) -> &'static str {
        match self {
            WeightKind::Plain => "plain",
            WeightKind::SqrtTimeWeighted => "sqrt-time-weighted",
        }
    }
}

/// Local time on a uniform grid of levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalTimeEstimate {
    pub levels: Vec<f64>,
    pub mass: Vec<f64>,
    pub bandwidth: f64,
    pub weight_kind: WeightKind,
    pub seed: u64,
}

impl LocalTimeEstimate {
    pub fn level_step(&self) -> f64 {
        self.levels[1] - self.levels[0]
    }

    /// `∫ ψ(a) L(a) da` by the trapezoid rule over the levels.
    pub fn integrate(&self, psi: impl Fn(f64) -> f64) -> f64 {
        let terms: Vec<f64> = self.levels.iter().zip(&self.mass).map(|(&a, &m)| psi(a) * m).collect();
        // The end levels sit a few bandwidths outside the range, where the mass is zero,
        // so the trapezoid reduces to the plain sum.
        self.level_step() * pairwise_sum(&terms)
    }

    pub fn total_mass(&self) -> f64 {
        self.integrate(|_| 1.0)
    }

    /// Midpoint Stieltjes sum `Σ f((a_k + a_{k+1})/2) (L(a_{k+1}) - L(a_k))`.
    pub fn stieltjes(&self, f: impl Fn(f64) -> f64) -> f64 {
        let terms: Vec<f64> = self
            .levels
            .windows(2)
            .zip(self.mass.windows(2))
            .map(|(a, m)| f(0.5 * (a[0] + a[1])) * (m[1] - m[0]))
            .collect();
        pairwise_sum(&terms)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "a,mass,bandwidth,weight_kind,seed")?;
        for (a, m) in self.levels.iter().zip(&self.mass) {
            writeln!(w, "{a:e},{m:e},{:e},{},{}", self.bandwidth, self.weight_kind.label(), self.seed)?;
        }
        Ok(())
    }
}

/// Trapezoid weights of nodes `lo..=hi` on the abscissa `abscissa`.
fn trapezoid_weights(abscissa: &[f64]) -> Vec<f64> {
    let n = abscissa.len();
    let mut w = vec![0.0; n];
    for i in 1..n {
        let h = 0.5 * (abscissa[i] - abscissa[i - 1]);
        w[i - 1] += h;
        w[i] += h;
    }
    w
}

/// Values and quadrature weights of the nodes spanning `I_x`.
fn space_nodes<'a>(path: &Path<'a>, x: f64) -> Result<(&'a [f64], Vec<f64>)> {
    let lo = path.node(x.min(0.0))?;
    let hi = path.node(x.max(0.0))?;
    Ok((&path.values()[lo..=hi], trapezoid_weights(&path.coords()[lo..=hi])))
}

/// Values on `[0, t]` and weights of `(1/√π) d√s`.
fn time_nodes<'a>(path: &Path<'a>, t: f64) -> Result<(&'a [f64], Vec<f64>)> {
    if path.coords()[0] != 0.0 {
        return Err(Error::Coverage(format!("time path must start at 0, starts at {}", path.coords()[0])));
    }
    let n = path.node(t)?;
    let v: Vec<f64> = path.coords()[..=n].iter().map(|s| s.sqrt()).collect();
    let w = trapezoid_weights(&v).into_iter().map(|w| w / PI.sqrt()).collect();
    Ok((&path.values()[..=n], w))
}

fn kernel_sum(values: &[f64], weights: &[f64], a: f64, k: &Mollifier) -> f64 {
    let terms: Vec<f64> = values.iter().zip(weights).map(|(&v, &w)| w * k.centered(v - a)).collect();
    pairwise_sum(&terms)
}

/// `L(a, x) ≈ ∫_{I_x} ζ_n(W_y - a) dy` with the kernel centred on `a`.
pub fn local_time_space(path: &Path, a: f64, x: f64, k: &Mollifier) -> Result<f64> {
    k.check_resolution(path.step())?;
    let (values, weights) = space_nodes(path, x)?;
    Ok(kernel_sum(values, &weights, a, k))
}

/// `𝓛(a, t) ≈ (1/√π) ∫_0^t ζ_n(B_s - a) d√s`; the `s = v²` substitution absorbs
/// the `1/√s` singularity of the weight.
pub fn weighted_local_time_time(path: &Path, a: f64, t: f64, k: &Mollifier) -> Result<f64> {
    k.check_resolution(path.step())?;
    let (values, weights) = time_nodes(path, t)?;
    Ok(kernel_sum(values, &weights, a, k))
}

fn gridded(values: &[f64], weights: &[f64], k: &Mollifier, count: usize, kind: WeightKind) -> Result<LocalTimeEstimate> {
    if count < 2 {
        return Err(Error::Config(format!("need at least two levels, got {count}")));
    }
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let pad = MARGIN * k.bandwidth().max(k.reach());
    let (lo, hi) = (min - pad, max + pad);
    // Refine until each kernel support holds LEVELS_PER_BANDWIDTH levels.
    let count = count.max(((hi - lo) * LEVELS_PER_BANDWIDTH / k.bandwidth()).ceil() as usize + 1);
    let da = (hi - lo) / (count - 1) as f64;
    let levels: Vec<f64> = (0..count).map(|i| lo + i as f64 * da).collect();
    let mut mass = vec![0.0; count];
    let r = k.reach();
    // Each node only feeds the levels within the kernel's reach.
    for (&v, &w) in values.iter().zip(weights) {
        let first = (((v - r - lo) / da).floor().max(0.0)) as usize;
        let last = ((((v + r - lo) / da).ceil()) as usize).min(count - 1);
        for (i, m) in mass.iter_mut().enumerate().take(last + 1).skip(first) {
            *m += w * k.centered(v - levels[i]);
        }
    }
    Ok(LocalTimeEstimate { levels, mass, bandwidth: k.bandwidth(), weight_kind: kind, seed: 0 })
}

/// `L(·, x)` on at least `count` levels spanning the path range over `I_x` plus three bandwidths.
pub fn local_time_grid_space(path: &Path, x: f64, k: &Mollifier, count: usize) -> Result<LocalTimeEstimate> {
    k.check_resolution(path.step())?;
    let (values, weights) = space_nodes(path, x)?;
    gridded(values, &weights, k, count, WeightKind::Plain)
}

/// `𝓛(·, t)` on at least `count` levels spanning the path range over `[0, t]` plus three bandwidths.
pub fn weighted_local_time_grid(path: &Path, t: f64, k: &Mollifier, count: usize) -> Result<LocalTimeEstimate> {
    k.check_resolution(path.step())?;
    let (values, weights) = time_nodes(path, t)?;
    gridded(values, &weights, k, count, WeightKind::SqrtTimeWeighted)
}

/// Uniform bins `[lo + i w, lo + (i+1) w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bins {
    pub lo: f64,
    pub width: f64,
    pub count: usize,
}

/// Occupation measure of a path over uniform bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Occupation {
    pub bins: Bins,
    pub mass: Vec<f64>,
}

impl Occupation {
    pub fn total(&self) -> f64 {
        pairwise_sum(&self.mass)
    }

    /// Mass per unit level in each bin.
    pub fn density(&self) -> Vec<f64> {
        self.mass.iter().map(|m| m / self.bins.width).collect()
    }
}

/// `μ(A) = ∫_{I_x} 1_A(W_y) dy` for the bins `A`, with `W` linear between nodes.
///
/// Each segment spreads its length uniformly over the levels it crosses, so the
/// total mass is `|x|` exactly. Bins are extended (with a warning) when the path
/// leaves them.
pub fn occupation_histogram(path: &Path, x: f64, bins: Bins) -> Result<Occupation> {
    if !(bins.width > 0.0 && bins.width.is_finite()) || bins.count == 0 || !bins.lo.is_finite() {
        return Err(Error::Config(format!("invalid bins {bins:?}")));
    }
    let lo = path.node(x.min(0.0))?;
    let hi = path.node(x.max(0.0))?;
    let w = &path.values()[lo..=hi];
    let (min, max) = w.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let mut bins = bins;
    let top = bins.lo + bins.count as f64 * bins.width;
    let below = if min < bins.lo { ((bins.lo - min) / bins.width).ceil() as usize } else { 0 };
    let above = if max > top { ((max - top) / bins.width).floor() as usize + 1 } else { 0 };
    if below > 0 || above > 0 {
        log::warn!("path range [{min}, {max}] leaves the bins; extending by {below} below and {above} above");
        bins.lo -= below as f64 * bins.width;
        bins.count += below + above;
    }
    let bin_of = |v: f64| (((v - bins.lo) / bins.width).floor() as usize).min(bins.count - 1);
    let mut mass = vec![0.0; bins.count];
    let h = path.step();
    for s in w.windows(2) {
        let (u, v) = if s[0] <= s[1] { (s[0], s[1]) } else { (s[1], s[0]) };
        if v == u {
            mass[bin_of(u)] += h;
            continue;
        }
        let (first, last) = (bin_of(u), bin_of(v));
        for (i, m) in mass.iter_mut().enumerate().take(last + 1).skip(first) {
            let left = bins.lo + i as f64 * bins.width;
            let overlap = (v.min(left + bins.width) - u.max(left)).max(0.0);
            *m += h * overlap / (v - u);
        }
    }
    Ok(Occupation { bins, mass })
}
