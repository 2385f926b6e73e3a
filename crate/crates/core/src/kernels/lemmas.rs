//! Executable checks of the covariance inequalities for the solution field.
//!
//! Each check evaluates the exact left-hand side and compares it against the
//! stated bound. Bounds with an unnamed constant are reported through the ratio
//! `lhs / shape`, whose supremum is then fitted per scale by [`sweep`].

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{
    cov_time_unchecked, increment_second_moment, moments_time_pair, space_deficit, variance,
};
use crate::error::{Error, Result};
use crate::quad::QuadratureConfig;
use crate::rng::replicate_rng;

/// Which inequality to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum LemmaId {
    /// Increment second moment against `√(t-s) + |x-y|`.
    IncrementBound,
    /// Time increments against a reference point, explicit constant `3/√(2π)`.
    TimeCovIncrement,
    /// Space increments against a reference point, explicit constant `1/4`.
    SpaceCovIncrement,
    /// Disjoint time increments.
    DisjointTime,
    /// Disjoint space increments, explicit constant `1/(4√(πt))`.
    DisjointSpace,
    /// Time-pair determinant bounds `[1/π, 3/π]·√(s(t-s))`.
    TimeDeterminant,
    /// Space-pair determinant against `(x-y)t/(√t + x-y)`.
    SpaceDeterminant,
}

impl LemmaId {
    pub const ALL: [LemmaId; 7] = [
        LemmaId::IncrementBound,
        LemmaId::TimeCovIncrement,
        LemmaId::SpaceCovIncrement,
        LemmaId::DisjointTime,
        LemmaId::DisjointSpace,
        LemmaId::TimeDeterminant,
        LemmaId::SpaceDeterminant,
    ];

    pub fn label(self) -> &'static str {
        match self {
            LemmaId::IncrementBound => "increment-bound",
            LemmaId::TimeCovIncrement => "time-cov-increment",
            LemmaId::SpaceCovIncrement => "space-cov-increment",
            LemmaId::DisjointTime => "disjoint-time",
            LemmaId::DisjointSpace => "disjoint-space",
            LemmaId::TimeDeterminant => "time-determinant",
            LemmaId::SpaceDeterminant => "space-determinant",
        }
    }

    /// Whether the bound carries an explicit constant (so each draw passes or fails).
    pub fn has_explicit_bound(self) -> bool {
        matches!(
            self,
            LemmaId::TimeCovIncrement
                | LemmaId::SpaceCovIncrement
                | LemmaId::DisjointSpace
                | LemmaId::TimeDeterminant
        )
    }
}

impl fmt::Display for LemmaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for LemmaId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LemmaId::ALL
            .into_iter()
            .find(|l| l.label() == s)
            .ok_or_else(|| Error::Config(format!("unknown lemma id `{s}`")))
    }
}

/// One parameter draw, tagged by the inequality it feeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LemmaDraw {
    IncrementBound { t: f64, s: f64, x: f64, y: f64 },
    TimeCovIncrement { r: f64, t: f64, s: f64 },
    SpaceCovIncrement { t: f64, x: f64, y: f64, z: f64 },
    DisjointTime { t: f64, s: f64, tp: f64, sp: f64 },
    DisjointSpace { t: f64, x: f64, y: f64, xp: f64, yp: f64 },
    TimeDeterminant { t: f64, s: f64 },
    SpaceDeterminant { t: f64, x: f64, y: f64 },
}

impl LemmaDraw {
    pub fn id(&self) -> LemmaId {
        match self {
            LemmaDraw::IncrementBound { .. } => LemmaId::IncrementBound,
            LemmaDraw::TimeCovIncrement { .. } => LemmaId::TimeCovIncrement,
            LemmaDraw::SpaceCovIncrement { .. } => LemmaId::SpaceCovIncrement,
            LemmaDraw::DisjointTime { .. } => LemmaId::DisjointTime,
            LemmaDraw::DisjointSpace { .. } => LemmaId::DisjointSpace,
            LemmaDraw::TimeDeterminant { .. } => LemmaId::TimeDeterminant,
            LemmaDraw::SpaceDeterminant { .. } => LemmaId::SpaceDeterminant,
        }
    }
}

/// Result of checking one admissible draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaCheck {
    pub lemma: LemmaId,
    /// Exact left-hand side.
    pub lhs: f64,
    /// Right-hand side: the explicit bound, or the shape when the constant is unnamed.
    pub rhs: f64,
    /// `rhs - lhs`.
    pub slack: f64,
    pub pass: bool,
    /// `lhs / shape`; `None` when the draw is degenerate.
    pub ratio: Option<f64>,
    /// For the disjoint-time bound: the ratio against a dimensionally consistent
    /// shape, reported alongside the printed one.
    pub alt_ratio: Option<f64>,
    pub degenerate: bool,
}

/// A checked draw, or a signal that the draw violated the ordering constraints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum LemmaOutcome {
    Checked(LemmaCheck),
    Rejected(String),
}

fn reject(msg: impl Into<String>) -> Result<LemmaOutcome> {
    Ok(LemmaOutcome::Rejected(msg.into()))
}

fn finite(vals: &[f64]) -> bool {
    vals.iter().all(|v| v.is_finite())
}

fn explicit(lemma: LemmaId, lhs: f64, bound: f64, tol: f64, ratio: Option<f64>) -> LemmaCheck {
    LemmaCheck {
        lemma,
        lhs,
        rhs: bound,
        slack: bound - lhs,
        pass: lhs <= bound + tol,
        ratio,
        alt_ratio: None,
        degenerate: false,
    }
}

fn shape_only(lemma: LemmaId, lhs: f64, shape: f64) -> LemmaCheck {
    if shape == 0.0 {
        return LemmaCheck {
            lemma,
            lhs,
            rhs: 0.0,
            slack: -lhs,
            pass: lhs.abs() <= 1e-14,
            ratio: None,
            alt_ratio: None,
            degenerate: true,
        };
    }
    let ratio = lhs / shape;
    LemmaCheck {
        lemma,
        lhs,
        rhs: shape,
        slack: shape - lhs,
        pass: ratio.is_finite(),
        ratio: Some(ratio),
        alt_ratio: None,
        degenerate: false,
    }
}

/// Evaluate one inequality at one draw.
pub fn lemma_bounds_check(draw: &LemmaDraw, quad: &QuadratureConfig) -> Result<LemmaOutcome> {
    match *draw {
        LemmaDraw::IncrementBound { t, s, x, y } => {
            if !finite(&[t, s, x, y]) || !(t >= s && s > 0.0) {
                return reject("needs t >= s > 0");
            }
            let lhs = increment_second_moment(t, x, s, y, quad)?.value;
            let shape = (t - s).sqrt() + (x - y).abs();
            Ok(LemmaOutcome::Checked(shape_only(LemmaId::IncrementBound, lhs, shape)))
        }
        LemmaDraw::TimeCovIncrement { r, t, s } => {
            if !finite(&[r, t, s]) || !(r > 0.0 && t > 0.0 && s > 0.0) {
                return reject("needs r, t, s > 0");
            }
            let lhs = (cov_time_unchecked(r, t) - cov_time_unchecked(r, s)).abs();
            let root = (t - s).abs().sqrt();
            let bound = 3.0 / (2.0 * PI).sqrt() * root;
            let ratio = (root > 0.0).then(|| lhs / root);
            let mut c = explicit(LemmaId::TimeCovIncrement, lhs, bound, 1e-14, ratio);
            c.degenerate = root == 0.0;
            Ok(LemmaOutcome::Checked(c))
        }
        LemmaDraw::SpaceCovIncrement { t, x, y, z } => {
            if !finite(&[t, x, y, z]) || !(t > 0.0) {
                return reject("needs t > 0");
            }
            // cov(x,y) - cov(x,z) = deficit(|x-z|) - deficit(|x-y|)
            let a = space_deficit(t, (x - z).abs(), quad)?;
            let b = space_deficit(t, (x - y).abs(), quad)?;
            let lhs = (a.value - b.value).abs();
            let gap = (y - z).abs();
            let ratio = (gap > 0.0).then(|| lhs / gap);
            let mut c = explicit(LemmaId::SpaceCovIncrement, lhs, 0.25 * gap, a.error + b.error, ratio);
            c.degenerate = gap == 0.0;
            Ok(LemmaOutcome::Checked(c))
        }
        LemmaDraw::DisjointTime { t, s, tp, sp } => {
            if !finite(&[t, s, tp, sp]) || !(t > s && s > tp && tp > sp && sp > 0.0) {
                return reject("needs t > s > t' > s' > 0");
            }
            let lhs = (cov_time_unchecked(t, tp) - cov_time_unchecked(s, tp) - cov_time_unchecked(t, sp)
                + cov_time_unchecked(s, sp))
            .abs();
            let shape = (tp - sp) * (t - s).sqrt() / (t * s * (s - sp) * (t - tp)).sqrt();
            let mut c = shape_only(LemmaId::DisjointTime, lhs, shape);
            let consistent = (tp - sp)
                * (t - s).sqrt()
                * (1.0 / (t * s).sqrt() + 1.0 / ((s - tp) * (t - tp)).sqrt());
            c.alt_ratio = Some(lhs / consistent);
            Ok(LemmaOutcome::Checked(c))
        }
        LemmaDraw::DisjointSpace { t, x, y, xp, yp } => {
            if !finite(&[t, x, y, xp, yp]) || !(t > 0.0 && x >= y && y > xp && xp >= yp) {
                return reject("needs t > 0 and x >= y > x' >= y'");
            }
            let bound = (x - y) * (xp - yp) * (-(y - xp).powi(2) / (4.0 * t)).exp() / (4.0 * (t * PI).sqrt());
            if x == y || xp == yp {
                let mut c = explicit(LemmaId::DisjointSpace, 0.0, bound, 0.0, None);
                c.degenerate = true;
                return Ok(LemmaOutcome::Checked(c));
            }
            // cov(a,b) = var - deficit(|a-b|), so the variances cancel exactly.
            let d1 = space_deficit(t, x - xp, quad)?;
            let d2 = space_deficit(t, x - yp, quad)?;
            let d3 = space_deficit(t, y - xp, quad)?;
            let d4 = space_deficit(t, y - yp, quad)?;
            let lhs = (-d1.value + d2.value + d3.value - d4.value).abs();
            let tol = d1.error + d2.error + d3.error + d4.error;
            let ratio = lhs / ((x - y) * (xp - yp) * (-(y - xp).powi(2) / (4.0 * t)).exp() / t.sqrt());
            Ok(LemmaOutcome::Checked(explicit(LemmaId::DisjointSpace, lhs, bound, tol, Some(ratio))))
        }
        LemmaDraw::TimeDeterminant { t, s } => {
            if !finite(&[t, s]) || !(t > s && s > 0.0) {
                return reject("needs t > s > 0");
            }
            let m = moments_time_pair(t, s)?;
            let root = (s * (t - s)).sqrt();
            let lo = root / PI;
            let hi = 3.0 * root / PI;
            let tol = 1e-13 * hi;
            Ok(LemmaOutcome::Checked(LemmaCheck {
                lemma: LemmaId::TimeDeterminant,
                lhs: m.rho2,
                rhs: hi,
                slack: (hi - m.rho2).min(m.rho2 - lo),
                pass: m.rho2 >= lo - tol && m.rho2 <= hi + tol,
                ratio: Some(m.rho2 / root),
                alt_ratio: None,
                degenerate: m.degenerate,
            }))
        }
        LemmaDraw::SpaceDeterminant { t, x, y } => {
            if !finite(&[t, x, y]) || !(t > 0.0 && x >= y) {
                return reject("needs t > 0 and x >= y");
            }
            let d = x - y;
            // var² - cov² = D (2 var - D) with D the deficit.
            let def = space_deficit(t, d, quad)?.value;
            let lhs = def * (2.0 * variance(t)? - def);
            let shape = d * t / (t.sqrt() + d);
            Ok(LemmaOutcome::Checked(shape_only(LemmaId::SpaceDeterminant, lhs, shape)))
        }
    }
}

/// Draw admissible parameters with time coordinates multiplied by `scale`.
pub fn random_draw<R: Rng + ?Sized>(id: LemmaId, scale: f64, rng: &mut R) -> LemmaDraw {
    // open interval (0, 1]
    let mut u = || 1.0 - rng.random::<f64>();
    match id {
        LemmaId::IncrementBound => {
            let t = scale * u();
            let s = t * u();
            LemmaDraw::IncrementBound { t, s, x: 2.0 * u() - 1.0, y: 2.0 * u() - 1.0 }
        }
        LemmaId::TimeCovIncrement => LemmaDraw::TimeCovIncrement {
            r: scale * u(),
            t: scale * u(),
            s: scale * u(),
        },
        LemmaId::SpaceCovIncrement => LemmaDraw::SpaceCovIncrement {
            t: scale * u(),
            x: 2.0 * u() - 1.0,
            y: 2.0 * u() - 1.0,
            z: 2.0 * u() - 1.0,
        },
        LemmaId::DisjointTime => {
            let mut v = [u(), u(), u(), u()];
            v.sort_by(|a, b| b.total_cmp(a));
            LemmaDraw::DisjointTime {
                t: scale * v[0],
                s: scale * v[1],
                tp: scale * v[2],
                sp: scale * v[3],
            }
        }
        LemmaId::DisjointSpace => {
            let mut v = [0.0; 4].map(|_| 2.0 * u() - 1.0);
            v.sort_by(|a, b| b.total_cmp(a));
            LemmaDraw::DisjointSpace { t: scale * u(), x: v[0], y: v[1], xp: v[2], yp: v[3] }
        }
        LemmaId::TimeDeterminant => {
            let t = scale * u();
            LemmaDraw::TimeDeterminant { t, s: t * u() }
        }
        LemmaId::SpaceDeterminant => {
            let a = 2.0 * u() - 1.0;
            let b = 2.0 * u() - 1.0;
            LemmaDraw::SpaceDeterminant { t: scale * u(), x: a.max(b), y: a.min(b) }
        }
    }
}

/// Extremes of the ratio `lhs / shape` at one scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleConstant {
    pub scale: f64,
    pub draws: usize,
    pub passed: usize,
    pub sup_ratio: f64,
    pub inf_ratio: f64,
    pub sup_alt_ratio: Option<f64>,
}

/// Summary of a randomized sweep for one inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaSweep {
    pub lemma: LemmaId,
    pub draws: usize,
    pub rejected: usize,
    pub failures: usize,
    pub pass_rate: f64,
    pub per_scale: Vec<ScaleConstant>,
    /// Largest relative deviation of a per-scale supremum from the median supremum.
    pub sup_spread: f64,
    /// Same for the infimum (meaningful for two-sided shapes).
    pub inf_spread: f64,
    pub worst: Option<LemmaCheck>,
}

impl LemmaSweep {
    /// Fitted constants agree within `tol` (relative) across all scales.
    pub fn stable(&self, tol: f64, two_sided: bool) -> bool {
        let finite = self
            .per_scale
            .iter()
            .all(|c| c.sup_ratio.is_finite() && c.sup_ratio > 0.0);
        finite && self.sup_spread <= tol && (!two_sided || self.inf_spread <= tol)
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn spread(v: &[f64]) -> f64 {
    let m = median(v.to_vec());
    v.iter().map(|x| ((x - m) / m).abs()).fold(0.0, f64::max)
}

/// Check `draws_per_scale` random admissible draws at each scale.
///
/// Draw `k` at scale index `j` uses the RNG stream `(seed, j * draws_per_scale + k)`,
/// so results do not depend on thread scheduling.
pub fn sweep(
    id: LemmaId,
    scales: &[f64],
    draws_per_scale: usize,
    seed: u64,
    quad: &QuadratureConfig,
) -> Result<LemmaSweep> {
    if scales.is_empty() || draws_per_scale == 0 {
        return Err(Error::Config("lemma sweep needs at least one scale and one draw".into()));
    }
    let mut per_scale = Vec::with_capacity(scales.len());
    let mut rejected = 0;
    let mut failures = 0;
    let mut checked = 0;
    let mut worst: Option<LemmaCheck> = None;
    for (j, &scale) in scales.iter().enumerate() {
        let outcomes: Vec<LemmaOutcome> = (0..draws_per_scale)
            .into_par_iter()
            .map(|k| {
                let mut rng = replicate_rng(seed, (j * draws_per_scale + k) as u64);
                let draw = random_draw(id, scale, &mut rng);
                lemma_bounds_check(&draw, quad)
            })
            .collect::<Result<_>>()?;
        let mut sup = f64::NEG_INFINITY;
        let mut inf = f64::INFINITY;
        let mut sup_alt: Option<f64> = None;
        let mut passed = 0;
        let mut count = 0;
        for o in outcomes {
            let c = match o {
                LemmaOutcome::Checked(c) => c,
                LemmaOutcome::Rejected(_) => {
                    rejected += 1;
                    continue;
                }
            };
            count += 1;
            if c.pass {
                passed += 1;
            } else {
                failures += 1;
            }
            if let Some(r) = c.ratio {
                sup = sup.max(r);
                inf = inf.min(r);
            }
            if let Some(a) = c.alt_ratio {
                sup_alt = Some(sup_alt.map_or(a, |s: f64| s.max(a)));
            }
            if c.lemma.has_explicit_bound() && worst.is_none_or(|w| c.slack < w.slack) {
                worst = Some(c);
            }
        }
        checked += count;
        per_scale.push(ScaleConstant {
            scale,
            draws: count,
            passed,
            sup_ratio: sup,
            inf_ratio: inf,
            sup_alt_ratio: sup_alt,
        });
    }
    let sups: Vec<f64> = per_scale.iter().map(|c| c.sup_ratio).collect();
    let infs: Vec<f64> = per_scale.iter().map(|c| c.inf_ratio).collect();
    let pass_rate = if checked == 0 {
        0.0
    } else {
        (checked - failures) as f64 / checked as f64
    };
    Ok(LemmaSweep {
        lemma: id,
        draws: checked + rejected,
        rejected,
        failures,
        pass_rate,
        per_scale,
        sup_spread: spread(&sups),
        inf_spread: spread(&infs),
        worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for id in LemmaId::ALL {
            assert_eq!(id.label().parse::<LemmaId>().unwrap(), id);
        }
        assert!("3.1".parse::<LemmaId>().is_err());
    }

    #[test]
    fn ordering_violation_is_rejected() {
        let quad = QuadratureConfig::default();
        let draw = LemmaDraw::DisjointTime { t: 1.0, s: 2.0, tp: 0.5, sp: 0.1 };
        assert!(matches!(lemma_bounds_check(&draw, &quad).unwrap(), LemmaOutcome::Rejected(_)));
    }
}
