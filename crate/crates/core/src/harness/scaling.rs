//! Analytic scaling limits of increment second moments, evaluated by quadrature.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::config::ScalingMode;
use crate::error::{Error, Result};
use crate::kernels::increment_second_moment;
use crate::qcov::EpsilonSchedule;
use crate::quad::QuadratureConfig;

/// Parabolic couplings `ε = k δ²` used for the joint check.
pub const JOINT_COUPLINGS: [f64; 3] = [0.5, 1.0, 2.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingCurve {
    /// Coupling constant `k` for joint curves; `None` otherwise.
    pub k: Option<f64>,
    pub ratios: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub mode: ScalingMode,
    pub levels: Vec<f64>,
    pub curves: Vec<ScalingCurve>,
    /// Limit the normalized ratios approach (1 for space and time), `None` for joint.
    pub target: Option<f64>,
}

impl ScalingReport {
    /// Ratio of each curve at the finest level.
    pub fn finest(&self) -> Vec<f64> {
        self.curves.iter().map(|c| *c.ratios.last().expect("non-empty schedule")).collect()
    }

    /// `(max - min) / min` across curves at the finest level.
    pub fn spread(&self) -> f64 {
        let f = self.finest();
        let lo = f.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (hi - lo) / lo
    }
}

/// Normalized increment ratios along the schedule.
///
/// - space: `E[(u(t, x+δ) - u(t, x))²] / δ`, limit 1;
/// - time: `E[(u(t+ε, x) - u(t, x))²] / √ε`, divided by `√(2/π)`, limit 1;
/// - joint: `E[(u(t+kδ², x+δ) - u(t, x))²] / δ` for each `k` in [`JOINT_COUPLINGS`].
pub fn scaling_limit_check(
    mode: ScalingMode,
    t: f64,
    x: f64,
    schedule: &EpsilonSchedule,
    quad: &QuadratureConfig,
) -> Result<ScalingReport> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("scaling check needs t > 0, got {t}")));
    }
    let levels = schedule.levels().to_vec();
    let curve = |f: &dyn Fn(f64) -> Result<f64>| -> Result<Vec<f64>> { levels.iter().map(|&l| f(l)).collect() };
    let (curves, target) = match mode {
        ScalingMode::Space => {
            let r = curve(&|d| Ok(increment_second_moment(t, x + d, t, x, quad)?.value / d))?;
            (vec![ScalingCurve { k: None, ratios: r }], Some(1.0))
        }
        ScalingMode::Time => {
            let norm = (2.0 / PI).sqrt();
            let r = curve(&|e| Ok(increment_second_moment(t + e, x, t, x, quad)?.value / e.sqrt() / norm))?;
            (vec![ScalingCurve { k: None, ratios: r }], Some(1.0))
        }
        ScalingMode::Joint => {
            let curves = JOINT_COUPLINGS
                .iter()
                .map(|&k| {
                    let r = curve(&|d| Ok(increment_second_moment(t + k * d * d, x + d, t, x, quad)?.value / d))?;
                    Ok(ScalingCurve { k: Some(k), ratios: r })
                })
                .collect::<Result<Vec<_>>>()?;
            (curves, None)
        }
    };
    Ok(ScalingReport { mode, levels, curves, target })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcov::ScheduleKind;

    #[test]
    fn limits_are_approached() {
        let q = QuadratureConfig::default();
        let s = EpsilonSchedule::dyadic(ScheduleKind::Spatial, 4, 8).unwrap();
        let r = scaling_limit_check(ScalingMode::Space, 1.0, 0.0, &s, &q).unwrap();
        assert!((r.finest()[0] - 1.0).abs() < 0.01);
        let s = EpsilonSchedule::dyadic(ScheduleKind::Temporal, 6, 12).unwrap();
        let r = scaling_limit_check(ScalingMode::Time, 1.0, 0.0, &s, &q).unwrap();
        assert!((r.finest()[0] - 1.0).abs() < 0.01);
        let j = scaling_limit_check(ScalingMode::Joint, 1.0, 0.0, &s, &q).unwrap();
        assert_eq!(j.curves.len(), 3);
        assert!(j.spread() > 0.05);
    }
}
