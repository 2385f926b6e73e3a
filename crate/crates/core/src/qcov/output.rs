//! Refinement schedules and per-level estimator records.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Spatial,
    Temporal,
}

/// Strictly decreasing increment scales (`δ` in space, `ε` in time).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    levels: Vec<f64>,
    kind: ScheduleKind,
}

impl EpsilonSchedule {
    pub fn new(kind: ScheduleKind, levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Config("schedule has no levels".into()));
        }
        if levels.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(Error::Config("schedule levels must be positive and finite".into()));
        }
        if levels.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("schedule levels must be strictly decreasing".into()));
        }
        Ok(Self { levels, kind })
    }

    /// Levels `2^{-from}, ..., 2^{-to}`.
    pub fn dyadic(kind: ScheduleKind, from: i32, to: i32) -> Result<Self> {
        if to < from {
            return Err(Error::Config(format!("dyadic schedule needs from <= to, got {from}..{to}")));
        }
        Self::new(kind, (from..=to).map(|e| 2f64.powi(-e)).collect())
    }

    /// Check the finest level resolves at least two steps of a path with spacing `step`.
    pub fn check_resolution(&self, step: f64) -> Result<()> {
        let finest = self.finest();
        if finest < 2.0 * step * (1.0 - 1e-12) {
            return Err(Error::Config(format!(
                "finest level {finest:e} is below two grid steps ({:e})",
                2.0 * step
            )));
        }
        Ok(())
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn finest(&self) -> f64 {
        *self.levels.last().expect("schedule is non-empty")
    }

    pub fn coarsest(&self) -> f64 {
        self.levels[0]
    }
}

/// Estimator values for one replicate across all schedule levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: u64,
    pub values: Vec<f64>,
    pub reference: f64,
}

/// Values per level and replicate, with the per-path reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOutput {
    pub kind: String,
    pub f_id: String,
    pub levels: Vec<f64>,
    pub seed: u64,
    pub replicates: Vec<ReplicateRecord>,
}

impl EstimatorOutput {
    pub fn new(kind: impl Into<String>, f_id: impl Into<String>, levels: Vec<f64>, seed: u64) -> Self {
        Self {
            kind: kind.into(),
            f_id: f_id.into(),
            levels,
            seed,
            replicates: Vec::new(),
        }
    }

    pub fn push(&mut self, record: ReplicateRecord) -> Result<()> {
        if record.values.len() != self.levels.len() {
            return Err(Error::Format(format!(
                "record has {} values for {} levels",
                record.values.len(),
                self.levels.len()
            )));
        }
        self.replicates.push(record);
        Ok(())
    }

    /// Values at level `l` across replicates.
    pub fn column(&self, l: usize) -> Vec<f64> {
        self.replicates.iter().map(|r| r.values[l]).collect()
    }

    /// Absolute gaps `|value - reference|` at level `l`.
    pub fn gaps(&self, l: usize) -> Vec<f64> {
        self.replicates.iter().map(|r| (r.values[l] - r.reference).abs()).collect()
    }

    pub fn references(&self) -> Vec<f64> {
        self.replicates.iter().map(|r| r.reference).collect()
    }

    pub fn write_csv_header<W: Write>(mut w: W) -> Result<()> {
        writeln!(w, "kind,f_id,level,value,reference,gap,seed,replicate")?;
        Ok(())
    }

    /// Rows for one replicate; lets long runs flush as they go.
    pub fn write_csv_record<W: Write>(&self, record: &ReplicateRecord, mut w: W) -> Result<()> {
        for (level, value) in self.levels.iter().zip(&record.values) {
            writeln!(
                w,
                "{},{},{:e},{:e},{:e},{:e},{},{}",
                self.kind,
                self.f_id,
                level,
                value,
                record.reference,
                (value - record.reference).abs(),
                self.seed,
                record.replicate
            )?;
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        Self::write_csv_header(&mut w)?;
        for r in &self.replicates {
            self.write_csv_record(r, &mut w)?;
        }
        Ok(())
    }
}
