//! Experiment configuration, read from TOML with one level of sections.

use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::FieldGrid;
use crate::localtime::{Mollifier, Profile};
use crate::qcov::{EpsilonSchedule, ScheduleKind};
use crate::sampler::fd::{FdConfig, FdMethod};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Sample,
    Qv,
    Pqc,
    Ito,
    Localtime,
    Lemmas,
    Scaling,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Sample => "sample",
            ExperimentKind::Qv => "qv",
            ExperimentKind::Pqc => "pqc",
            ExperimentKind::Ito => "ito",
            ExperimentKind::Localtime => "localtime",
            ExperimentKind::Lemmas => "lemmas",
            ExperimentKind::Scaling => "scaling",
        }
    }
}

/// Which parameter a path runs along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// `x ↦ u(t, x)` at fixed `t`.
    Space,
    /// `t ↦ u(t, x)` at fixed `x`.
    Time,
    /// A full time × space grid (sampling only).
    Joint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub axis: Axis,
    /// Fixed time of a space path, or the end time of a time path.
    pub t: f64,
    /// End point of a space path, or the fixed position of a time path.
    pub x: f64,
    /// Path spacing is `2^-step_log2`.
    pub step_log2: i32,
    pub t_start: f64,
    pub t_end: f64,
    pub t_points: usize,
    pub x_start: f64,
    pub x_end: f64,
    pub x_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            axis: Axis::Space,
            t: 1.0,
            x: 1.0,
            step_log2: 12,
            t_start: 0.1,
            t_end: 1.0,
            t_points: 6,
            x_start: 0.0,
            x_end: 1.0,
            x_points: 6,
        }
    }
}

impl GridSpec {
    pub fn step(&self) -> f64 {
        2f64.powi(-self.step_log2)
    }

    /// The sampling grid: a slice long enough for the coarsest level beyond the
    /// endpoint, or the joint grid.
    pub fn build(&self, coarsest: f64) -> Result<FieldGrid> {
        match self.axis {
            Axis::Joint => FieldGrid::new(
                FieldGrid::linspace(self.t_start, self.t_end, self.t_points.saturating_sub(1)),
                FieldGrid::linspace(self.x_start, self.x_end, self.x_points.saturating_sub(1)),
            ),
            Axis::Space => {
                let h = self.step();
                let lo = self.x.min(0.0);
                let hi = self.x.max(0.0) + coarsest;
                let steps = ((hi - lo) / h).round() as usize;
                FieldGrid::space_slice(self.t, (0..=steps).map(|i| lo + i as f64 * h).collect())
            }
            Axis::Time => {
                let h = self.step();
                let steps = ((self.t + coarsest) / h).round() as usize;
                FieldGrid::time_slice((0..=steps).map(|i| i as f64 * h).collect(), self.x)
            }
        }
    }
}

/// Dyadic levels `2^-from, ..., 2^-to`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub from: i32,
    pub to: i32,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        Self { from: 4, to: 9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FunctionSpec {
    /// Registry name with parameters, e.g. `sin` or `indicator:-0.3:0.3`;
    /// `registry` runs over every shipped function.
    pub id: String,
    /// Level `a` for Tanaka checks.
    pub level: f64,
    /// Use the median of the path values over the interval as the level.
    pub median_level: bool,
}

impl Default for FunctionSpec {
    fn default() -> Self {
        Self { id: "identity".into(), level: 0.0, median_level: false }
    }
}

/// Thresholds; a criterion is asserted only when its tolerance is set.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Expected limit of the finest-level mean (QV).
    pub mean_target: Option<f64>,
    /// Relative half-width of the band around `mean_target`.
    pub mean_rel_tol: Option<f64>,
    pub min_r2: Option<f64>,
    pub max_relative_gap: Option<f64>,
    pub max_mean_abs: Option<f64>,
    /// Decreases allowed to fail along the schedule.
    pub trend_violations: Option<usize>,
    pub max_z: Option<f64>,
    pub max_rel_error: Option<f64>,
    pub mass_rel_tol: Option<f64>,
    pub stability: Option<f64>,
    pub ratio_tol: Option<f64>,
    pub min_spread: Option<f64>,
    pub bound_factor: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Exact,
    Fd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerSpec {
    pub method: SamplerKind,
    pub fd_dx: f64,
    /// Time step as a fraction of `dx²`.
    pub fd_dt_ratio: f64,
    pub fd_half_width: f64,
    pub fd_method: FdMethod,
    /// Write every sample as CSV.
    pub write_samples: bool,
}

impl Default for SamplerSpec {
    fn default() -> Self {
        Self {
            method: SamplerKind::Exact,
            fd_dx: 1.0 / 128.0,
            fd_dt_ratio: 0.5,
            fd_half_width: 8.0,
            fd_method: FdMethod::Modal,
            write_samples: false,
        }
    }
}

impl SamplerSpec {
    pub fn fd(&self) -> FdConfig {
        FdConfig::new(self.fd_dx, self.fd_dt_ratio * self.fd_dx * self.fd_dx, self.fd_half_width, self.fd_method)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocalTimeCheck {
    BouleauYor,
    Tanaka,
    Mass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocalTimeSpec {
    pub check: LocalTimeCheck,
    pub profile: Profile,
    /// Bandwidth `h = factor · level^exponent`.
    pub bandwidth_factor: f64,
    pub bandwidth_exponent: f64,
    pub levels: usize,
}

impl Default for LocalTimeSpec {
    fn default() -> Self {
        Self {
            check: LocalTimeCheck::BouleauYor,
            profile: Profile::Bump,
            bandwidth_factor: 1.0,
            bandwidth_exponent: 0.5,
            levels: crate::localtime::LEVELS,
        }
    }
}

impl LocalTimeSpec {
    pub fn mollifier(&self, level: f64) -> Result<Mollifier> {
        Mollifier::with_bandwidth(self.bandwidth_factor * level.powf(self.bandwidth_exponent), self.profile)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LemmaSpec {
    /// Draws per scale.
    pub draws: usize,
    /// Time scales are `10^scale_log10_from, ..., 10^scale_log10_to`.
    pub scale_log10_from: i32,
    pub scale_log10_to: i32,
    /// Comma-separated inequality names; empty means all.
    pub only: String,
}

impl Default for LemmaSpec {
    fn default() -> Self {
        Self { draws: 2500, scale_log10_from: -2, scale_log10_to: 1, only: String::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingMode {
    Space,
    Time,
    Joint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingSpec {
    pub mode: ScalingMode,
}

impl Default for ScalingSpec {
    fn default() -> Self {
        Self { mode: ScalingMode::Space }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    /// Directory for CSV files and the JSON report; nothing is written when unset.
    pub dir: Option<PathBuf>,
    /// File stem; defaults to the experiment kind.
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default = "one")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: GridSpec,
    pub schedule: Option<ScheduleSpec>,
    #[serde(default)]
    pub function: FunctionSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub sampler: SamplerSpec,
    #[serde(default)]
    pub localtime: LocalTimeSpec,
    #[serde(default)]
    pub lemmas: LemmaSpec,
    #[serde(default)]
    pub scaling: ScalingSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

fn one() -> usize {
    1
}

fn positive(name: &str, v: Option<f64>) -> Result<()> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(Error::Config(format!("tolerances.{name} must be > 0, got {x}"))),
        _ => Ok(()),
    }
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            replicates: 1,
            seed: 0,
            grid: GridSpec::default(),
            schedule: match kind {
                ExperimentKind::Sample | ExperimentKind::Lemmas => None,
                _ => Some(ScheduleSpec::default()),
            },
            function: FunctionSpec::default(),
            tolerances: Tolerances::default(),
            sampler: SamplerSpec::default(),
            localtime: LocalTimeSpec::default(),
            lemmas: LemmaSpec::default(),
            scaling: ScalingSpec::default(),
            output: OutputSpec::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &FsPath) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    /// Hex SHA-256 of the canonical JSON form plus the library version.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).as_bytes());
        h.update(serde_json::to_vec(self).expect("config serializes"));
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn schedule_kind(&self) -> ScheduleKind {
        match self.grid.axis {
            Axis::Time => ScheduleKind::Temporal,
            _ => ScheduleKind::Spatial,
        }
    }

    /// The dyadic schedule, `2^-4 .. 2^-9` when none is given.
    pub fn schedule(&self) -> Result<EpsilonSchedule> {
        let s = self.schedule.unwrap_or_default();
        EpsilonSchedule::dyadic(self.schedule_kind(), s.from, s.to).map_err(|e| Error::Config(format!("schedule: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("replicates: must be at least 1".into()));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("mean_target", t.mean_target),
            ("mean_rel_tol", t.mean_rel_tol),
            ("min_r2", t.min_r2),
            ("max_relative_gap", t.max_relative_gap),
            ("max_mean_abs", t.max_mean_abs),
            ("max_z", t.max_z),
            ("max_rel_error", t.max_rel_error),
            ("mass_rel_tol", t.mass_rel_tol),
            ("stability", t.stability),
            ("ratio_tol", t.ratio_tol),
            ("min_spread", t.min_spread),
            ("bound_factor", t.bound_factor),
        ] {
            positive(name, v)?;
        }
        let g = &self.grid;
        let needs_path = matches!(self.kind, ExperimentKind::Qv | ExperimentKind::Pqc | ExperimentKind::Ito | ExperimentKind::Localtime);
        if needs_path {
            if g.axis == Axis::Joint {
                return Err(Error::Config(format!("grid.axis: kind `{}` needs a space or time path", self.kind.name())));
            }
            if !(g.t > 0.0) {
                return Err(Error::Config(format!("grid.t: must be > 0, got {}", g.t)));
            }
            if g.axis == Axis::Space && g.x == 0.0 {
                return Err(Error::Config("grid.x: a space path needs x != 0".into()));
            }
            let sched = self.schedule()?;
            sched
                .check_resolution(g.step())
                .map_err(|e| Error::Config(format!("schedule: {e}")))?;
        }
        if self.kind == ExperimentKind::Scaling {
            if !(g.t > 0.0) {
                return Err(Error::Config(format!("grid.t: must be > 0, got {}", g.t)));
            }
            self.schedule()?;
        }
        if self.kind == ExperimentKind::Sample {
            if g.axis == Axis::Joint && (g.t_points == 0 || g.x_points == 0) {
                return Err(Error::Config("grid: joint grids need t_points and x_points >= 1".into()));
            }
            if self.sampler.method == SamplerKind::Fd {
                self.sampler.fd().validate().map_err(|e| Error::Config(format!("sampler: {e}")))?;
            }
        }
        if self.kind == ExperimentKind::Lemmas {
            if self.lemmas.draws == 0 {
                return Err(Error::Config("lemmas.draws: must be at least 1".into()));
            }
            if self.lemmas.scale_log10_to < self.lemmas.scale_log10_from {
                return Err(Error::Config("lemmas: scale_log10_to must be >= scale_log10_from".into()));
            }
        }
        if self.kind == ExperimentKind::Localtime {
            let l = &self.localtime;
            if !(l.bandwidth_factor > 0.0) || l.levels < 2 {
                return Err(Error::Config("localtime: bandwidth_factor must be > 0 and levels >= 2".into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_rejects_unknown_keys() {
        let cfg = ExperimentConfig::from_toml(
            r#"
kind = "qv"
replicates = 4
seed = 9

[grid]
axis = "space"
step_log2 = 10

[schedule]
from = 4
to = 8

[tolerances]
mean_target = 1.0
mean_rel_tol = 0.05
"#,
        )
        .unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Qv);
        assert_eq!(cfg.schedule().unwrap().levels().len(), 5);
        let bad = ExperimentConfig::from_toml("kind = \"qv\"\n[grid]\nstep = 3\n");
        assert!(matches!(bad, Err(Error::Config(_))));
    }

    #[test]
    fn field_level_messages() {
        let err = ExperimentConfig::from_toml("kind = \"qv\"\nreplicates = 0\n").unwrap_err();
        assert!(err.to_string().contains("replicates"));
        let err = ExperimentConfig::from_toml("kind = \"qv\"\n[schedule]\nfrom = 4\nto = 12\n").unwrap_err();
        assert!(err.to_string().contains("schedule"));
        let err = ExperimentConfig::from_toml("kind = \"pqc\"\n[tolerances]\nmax_relative_gap = -1.0\n").unwrap_err();
        assert!(err.to_string().contains("max_relative_gap"));
    }

    #[test]
    fn round_trip_keeps_fingerprint() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Lemmas);
        cfg.lemmas.draws = 10;
        let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg.fingerprint(), again.fingerprint());
        cfg.seed = 1;
        assert_ne!(cfg.fingerprint(), again.fingerprint());
    }

    #[test]
    fn slice_grids_cover_the_coarsest_level() {
        let g = GridSpec { axis: Axis::Time, t: 1.0, step_log2: 6, ..Default::default() };
        let grid = g.build(0.25).unwrap();
        assert_eq!(grid.nt(), 81);
        assert!((grid.times()[80] - 1.25).abs() < 1e-12);
    }
}
