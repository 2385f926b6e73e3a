//! Run reports: criteria with the numbers that decide them, per-level summaries
//! and timings, serialized as JSON.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use super::stats::{Aggregate, RateFit};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    /// `value <= target`
    AtMost,
    /// `value >= target`
    AtLeast,
    /// `value > target`
    Exceeds,
    /// `|value - target| <= tolerance`
    Within,
}

/// One asserted check; `pass` follows from the other fields alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub id: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub kind: Comparison,
    pub pass: bool,
}

impl Criterion {
    pub fn new(id: impl Into<String>, value: f64, kind: Comparison, target: f64, tolerance: f64) -> Self {
        let mut c = Self { id: id.into(), value, target, tolerance, kind, pass: false };
        c.pass = c.evaluate();
        c
    }

    pub fn at_most(id: impl Into<String>, value: f64, limit: f64) -> Self {
        Self::new(id, value, Comparison::AtMost, limit, 0.0)
    }

    pub fn at_least(id: impl Into<String>, value: f64, limit: f64) -> Self {
        Self::new(id, value, Comparison::AtLeast, limit, 0.0)
    }

    pub fn exceeds(id: impl Into<String>, value: f64, limit: f64) -> Self {
        Self::new(id, value, Comparison::Exceeds, limit, 0.0)
    }

    pub fn within(id: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        Self::new(id, value, Comparison::Within, target, tolerance)
    }

    /// Recompute the verdict from the recorded numbers; NaN never passes.
    pub fn evaluate(&self) -> bool {
        match self.kind {
            Comparison::AtMost => self.value <= self.target,
            Comparison::AtLeast => self.value >= self.target,
            Comparison::Exceeds => self.value > self.target,
            Comparison::Within => (self.value - self.target).abs() <= self.tolerance,
        }
    }
}

/// Replicate summary at one schedule level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub series: String,
    pub level: f64,
    pub value: Aggregate,
    /// Mean of `|value - reference|` across replicates.
    pub mean_abs_gap: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub sampling_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub kind: String,
    pub software: String,
    pub config_fingerprint: String,
    pub seed: u64,
    pub replicates: usize,
    pub levels: Vec<LevelSummary>,
    pub rate: Option<RateFit>,
    pub criteria: Vec<Criterion>,
    /// Recorded but not asserted numbers.
    pub diagnostics: BTreeMap<String, f64>,
    pub timings: Timings,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.pass)
    }

    /// Recompute every verdict and check it matches the recorded one.
    pub fn recheck(&self) -> Result<bool> {
        for c in &self.criteria {
            if c.evaluate() != c.pass {
                return Err(Error::Format(format!("criterion `{}` records pass = {} inconsistently", c.id, c.pass)));
            }
        }
        Ok(self.passed())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn write(&self, path: &FsPath) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_json()?.as_bytes())?;
        f.write_all(b"\n")?;
        Ok(())
    }

    pub fn read(path: &FsPath) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// One line per criterion, then the diagnostics.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.criteria {
            let verdict = if c.pass { "PASS" } else { "FAIL" };
            let rule = match c.kind {
                Comparison::AtMost => format!("<= {}", c.target),
                Comparison::AtLeast => format!(">= {}", c.target),
                Comparison::Exceeds => format!("> {}", c.target),
                Comparison::Within => format!("= {} ± {}", c.target, c.tolerance),
            };
            s.push_str(&format!("{verdict} {} value={:.6} {rule}\n", c.id, c.value));
        }
        for (k, v) in &self.diagnostics {
            s.push_str(&format!("  {k} = {v:.6}\n"));
        }
        s
    }
}
