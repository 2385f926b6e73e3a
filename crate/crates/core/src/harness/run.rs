//! The experiment runner: sample paths, evaluate estimators along the schedule,
//! stream CSV rows and assemble the report.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;

use super::cache::exact_paths;
use super::config::{Axis, ExperimentConfig, ExperimentKind, LocalTimeCheck, SamplerKind, ScalingMode};
use super::report::{Criterion, LevelSummary, RunReport, Timings};
use super::scaling::scaling_limit_check;
use super::stats::{mc_aggregate, rate_fit, trend_violations, RateFit};
use crate::error::{Error, Result};
use crate::kernels::lemmas::{sweep, LemmaId};
use crate::kernels::{cov_spacetime, CovQuery};
use crate::localtime::{
    bouleau_yor_residual, local_time_grid_space, tanaka_residual_space, tanaka_residual_time, weighted_local_time_grid,
};
use crate::numeric::pairwise_sum;
use crate::qcov::{
    ito_residual_space, ito_residual_time, ito_residual_time_with_trace, norm_ht, registry, spatial_pqc,
    spatial_pqc_reference, spatial_qv, temporal_pqc, temporal_pqc_reference, temporal_qv, EpsilonSchedule,
    EstimatorOutput, Path, ReplicateRecord, TestFunction,
};
use crate::quad::QuadratureConfig;
use crate::sampler::fd::{fd_covariance, fd_integrate};
use crate::sampler::{io as sample_io, FieldSample, SamplerConfig};

/// Replicates evaluated between CSV flushes.
const CHUNK: usize = 32;

/// Per-series values at every level plus the per-path reference.
type PathResult = Vec<(Vec<f64>, f64)>;

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    quad: QuadratureConfig,
    sampler: SamplerConfig,
    criteria: Vec<Criterion>,
    diagnostics: BTreeMap<String, f64>,
    levels: Vec<LevelSummary>,
    rate: Option<RateFit>,
    sampling_seconds: f64,
}

impl Context<'_> {
    fn out_path(&self, suffix: &str) -> Result<Option<PathBuf>> {
        let Some(dir) = &self.cfg.output.dir else {
            return Ok(None);
        };
        std::fs::create_dir_all(dir)?;
        let stem = self.cfg.output.name.clone().unwrap_or_else(|| self.cfg.kind.name().to_string());
        Ok(Some(dir.join(format!("{stem}{suffix}"))))
    }

    fn csv(&self, suffix: &str) -> Result<Option<BufWriter<File>>> {
        Ok(match self.out_path(suffix)? {
            Some(p) => Some(BufWriter::new(File::create(p)?)),
            None => None,
        })
    }

    fn diag(&mut self, key: impl Into<String>, v: f64) {
        self.diagnostics.insert(key.into(), v);
    }

    fn paths(&mut self, schedule: &EpsilonSchedule) -> Result<std::sync::Arc<Vec<FieldSample>>> {
        let grid = self.cfg.grid.build(schedule.coarsest())?;
        let start = Instant::now();
        let p = exact_paths(grid, self.cfg.replicates, self.cfg.seed, &self.quad, &self.sampler)?;
        self.sampling_seconds += start.elapsed().as_secs_f64();
        Ok(p)
    }

    /// Evaluate `f` on every path, streaming one CSV per series.
    fn evaluate<F>(&mut self, names: &[String], f_id: &str, schedule: &EpsilonSchedule, f: F) -> Result<Vec<EstimatorOutput>>
    where
        F: Fn(&Path) -> Result<PathResult> + Sync,
    {
        let paths = self.paths(schedule)?;
        let n = self.cfg.replicates;
        let grid = paths[0].grid().clone();
        let coords: Vec<f64> = match self.cfg.grid.axis {
            Axis::Time => grid.times().to_vec(),
            _ => grid.spaces().to_vec(),
        };
        let levels = schedule.levels().to_vec();
        let mut outputs: Vec<EstimatorOutput> = names
            .iter()
            .map(|s| EstimatorOutput::new(s.clone(), f_id, levels.clone(), self.cfg.seed))
            .collect();
        let mut sinks = Vec::with_capacity(names.len());
        for s in names {
            let mut w = self.csv(&format!("_{s}.csv"))?;
            if let Some(w) = w.as_mut() {
                EstimatorOutput::write_csv_header(w)?;
            }
            sinks.push(w);
        }
        for chunk in (0..n).collect::<Vec<_>>().chunks(CHUNK) {
            let results: Vec<PathResult> = chunk
                .par_iter()
                .map(|&k| {
                    let path = Path::new(&coords, paths[k].values())?;
                    let r = f(&path)?;
                    if r.len() != names.len() {
                        return Err(Error::Format(format!("{} series for {} names", r.len(), names.len())));
                    }
                    Ok(r)
                })
                .collect::<Result<_>>()?;
            for (&k, series) in chunk.iter().zip(results) {
                for ((out, sink), (values, reference)) in outputs.iter_mut().zip(sinks.iter_mut()).zip(series) {
                    let rec = ReplicateRecord { replicate: k as u64, values, reference };
                    if let Some(w) = sink.as_mut() {
                        out.write_csv_record(&rec, &mut *w)?;
                    }
                    out.push(rec)?;
                }
            }
            for w in sinks.iter_mut().flatten() {
                w.flush()?;
            }
        }
        for out in &outputs {
            for (l, &level) in levels.iter().enumerate() {
                self.levels.push(LevelSummary {
                    series: out.kind.clone(),
                    level,
                    value: mc_aggregate(&out.column(l))?,
                    mean_abs_gap: mean(&out.gaps(l)),
                });
            }
        }
        Ok(outputs)
    }

    /// Mean `|value - reference|` at the finest level, and the trend check if requested.
    fn residual_criteria(&mut self, out: &EstimatorOutput) {
        let gaps: Vec<f64> = (0..out.levels.len()).map(|l| mean(&out.gaps(l))).collect();
        let finest = *gaps.last().expect("non-empty schedule");
        let tol = &self.cfg.tolerances;
        let (max_abs, trend) = (tol.max_mean_abs, tol.trend_violations);
        self.diag(format!("{}.finest_mean_abs", out.kind), finest);
        if let Some(limit) = max_abs {
            self.criteria.push(Criterion::at_most(format!("{}.finest_mean_abs", out.kind), finest, limit));
        }
        let v = trend_violations(&gaps) as f64;
        self.diag(format!("{}.trend_violations", out.kind), v);
        if let Some(allowed) = trend {
            self.criteria.push(Criterion::at_most(format!("{}.trend_violations", out.kind), v, allowed as f64));
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    pairwise_sum(v) / v.len() as f64
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

fn function(cfg: &ExperimentConfig) -> Result<TestFunction> {
    registry::lookup(&cfg.function.id).map_err(|e| Error::Config(format!("function.id: {e}")))
}

/// Values of the path over `I_x` (space) or `[0, t]` (time).
fn interval_values<'a>(path: &Path<'a>, cfg: &ExperimentConfig) -> Result<&'a [f64]> {
    let g = &cfg.grid;
    let (lo, hi) = match g.axis {
        Axis::Time => (0, path.node(g.t)?),
        _ => (path.node(g.x.min(0.0))?, path.node(g.x.max(0.0))?),
    };
    Ok(&path.values()[lo..=hi])
}

fn tanaka_level(path: &Path, cfg: &ExperimentConfig) -> Result<f64> {
    if cfg.function.median_level {
        Ok(median(interval_values(path, cfg)?.to_vec()))
    } else {
        Ok(cfg.function.level)
    }
}

fn run_qv(ctx: &mut Context) -> Result<()> {
    let cfg = ctx.cfg;
    let schedule = cfg.schedule()?;
    let (t, x, axis) = (cfg.grid.t, cfg.grid.x, cfg.grid.axis);
    let reference = match axis {
        Axis::Time => (2.0 * t / PI).sqrt(),
        _ => x.abs(),
    };
    let levels = schedule.levels().to_vec();
    let outs = ctx.evaluate(&["qv".into()], "identity", &schedule, |p| {
        let v = levels
            .iter()
            .map(|&l| match axis {
                Axis::Time => temporal_qv(p, t, l),
                _ => spatial_qv(p, x, l),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(vec![(v, reference)])
    })?;
    let out = &outs[0];
    let finest = mean(&out.column(levels.len() - 1));
    ctx.diag("qv.reference", reference);
    let tol = ctx.cfg.tolerances.clone();
    if let Some(rel) = tol.mean_rel_tol {
        let target = tol.mean_target.unwrap_or(reference);
        ctx.criteria.push(Criterion::within("qv.finest_mean", finest, target, rel * target));
    } else {
        ctx.diag("qv.finest_mean", finest);
    }
    let gaps: Vec<f64> = (0..levels.len()).map(|l| mean(&out.gaps(l))).collect();
    if levels.len() >= 3 {
        let fit = rate_fit(&levels, &gaps)?;
        ctx.rate = Some(fit);
        if let Some(r2) = tol.min_r2 {
            ctx.criteria.push(Criterion::exceeds("qv.rate_alpha", fit.alpha, 0.0));
            ctx.criteria.push(Criterion::at_least("qv.rate_r2", fit.r2, r2));
        }
    }
    Ok(())
}

fn run_pqc(ctx: &mut Context) -> Result<()> {
    if ctx.cfg.function.id == "registry" {
        return run_registry_bound(ctx);
    }
    let cfg = ctx.cfg;
    let schedule = cfg.schedule()?;
    let f = function(cfg)?;
    f.deriv().map_err(|e| Error::Config(format!("function.id: {e}")))?;
    let (t, x, axis) = (cfg.grid.t, cfg.grid.x, cfg.grid.axis);
    let levels = schedule.levels().to_vec();
    let outs = ctx.evaluate(&["pqc".into()], f.id(), &schedule, |p| {
        let v = levels
            .iter()
            .map(|&l| match axis {
                Axis::Time => temporal_pqc(p, &f, t, l),
                _ => spatial_pqc(p, &f, x, l),
            })
            .collect::<Result<Vec<_>>>()?;
        let r = match axis {
            Axis::Time => temporal_pqc_reference(p, &f, t)?,
            _ => spatial_pqc_reference(p, &f, x)?,
        };
        Ok(vec![(v, r)])
    })?;
    let out = &outs[0];
    let refs: f64 = pairwise_sum(&out.references().iter().map(|r| r.abs()).collect::<Vec<_>>());
    let rel: Vec<f64> = (0..levels.len()).map(|l| pairwise_sum(&out.gaps(l)) / refs).collect();
    let finest = *rel.last().expect("non-empty schedule");
    for (l, r) in levels.iter().zip(&rel) {
        ctx.diag(format!("pqc.relative_gap@{l:e}"), *r);
    }
    if let Some(limit) = ctx.cfg.tolerances.max_relative_gap {
        ctx.criteria.push(Criterion::at_most("pqc.relative_gap", finest, limit));
    }
    if let Some(allowed) = ctx.cfg.tolerances.trend_violations {
        ctx.criteria.push(Criterion::at_most("pqc.trend_violations", trend_violations(&rel) as f64, allowed as f64));
    }
    Ok(())
}

/// Second moments of the finest spatial covariation against `K ‖f‖²_{H_t}` with a
/// single `K` fitted as the median ratio over the shipped functions.
fn run_registry_bound(ctx: &mut Context) -> Result<()> {
    let cfg = ctx.cfg;
    if cfg.grid.axis != Axis::Space {
        return Err(Error::Config("grid.axis: the registry bound uses space paths".into()));
    }
    let schedule = cfg.schedule()?;
    let fs = registry::shipped();
    let (t, x) = (cfg.grid.t, cfg.grid.x);
    let delta = schedule.finest();
    let names: Vec<String> = fs.iter().map(|f| format!("pqc_{}", f.id())).collect();
    let outs = ctx.evaluate(&names, "registry", &schedule, |p| {
        fs.iter()
            .map(|f| {
                let v = schedule.levels().iter().map(|&l| spatial_pqc(p, f, x, l)).collect::<Result<Vec<_>>>()?;
                Ok((v, 0.0))
            })
            .collect()
    })?;
    let mut ratios = Vec::new();
    for (f, out) in fs.iter().zip(&outs) {
        let col = out.column(schedule.levels().len() - 1);
        let m2 = mean(&col.iter().map(|v| v * v).collect::<Vec<_>>());
        let norm = norm_ht(f, t, x, &ctx.quad)?;
        ctx.diag(format!("registry.{}.second_moment", f.id()), m2);
        ctx.diag(format!("registry.{}.norm_squared", f.id()), norm.squared);
        if norm.divergent || norm.squared <= 0.0 {
            continue;
        }
        let r = m2 / norm.squared;
        ctx.diag(format!("registry.{}.ratio", f.id()), r);
        ratios.push(r);
    }
    let k = median(ratios.clone());
    let worst = ratios.iter().cloned().fold(0.0, f64::max) / k;
    ctx.diag("registry.fitted_k", k);
    ctx.diag("registry.delta", delta);
    let factor = ctx.cfg.tolerances.bound_factor;
    match factor {
        Some(limit) => ctx.criteria.push(Criterion::at_most("registry.max_ratio_over_k", worst, limit)),
        None => ctx.diag("registry.max_ratio_over_k", worst),
    }
    Ok(())
}

fn run_ito(ctx: &mut Context) -> Result<()> {
    let cfg = ctx.cfg;
    let schedule = cfg.schedule()?;
    let big_f = function(cfg)?;
    let f = big_f.derivative().map_err(|e| Error::Config(format!("function.id: {e}")))?;
    let (t, x, axis) = (cfg.grid.t, cfg.grid.x, cfg.grid.axis);
    let levels = schedule.levels().to_vec();
    let lt = cfg.localtime.clone();
    let outs = ctx.evaluate(&["ito".into()], big_f.id(), &schedule, |p| {
        let v = levels
            .iter()
            .map(|&l| match axis {
                Axis::Time if big_f.deriv2().is_ok() => ito_residual_time(&big_f, p, t, l),
                Axis::Time => {
                    // ½ ∫ F''(y) 𝓛(y) dy = -½ ∫ F' d𝓛 over the gridded weighted local time.
                    let est = weighted_local_time_grid(p, t, &lt.mollifier(l)?, lt.levels)?;
                    let trace = -0.5 * est.stieltjes(|a| f.eval(a));
                    ito_residual_time_with_trace(&big_f, p, t, l, trace)
                }
                _ => ito_residual_space(&big_f, p, x, l),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(vec![(v, 0.0)])
    })?;
    ctx.residual_criteria(&outs[0]);
    Ok(())
}

fn run_localtime(ctx: &mut Context) -> Result<()> {
    let cfg = ctx.cfg;
    let schedule = cfg.schedule()?;
    let (t, x, axis) = (cfg.grid.t, cfg.grid.x, cfg.grid.axis);
    let levels = schedule.levels().to_vec();
    let lt = cfg.localtime.clone();
    match (lt.check, axis) {
        (LocalTimeCheck::BouleauYor, Axis::Space) => {
            let f = function(cfg)?;
            let outs = ctx.evaluate(&["bouleau_yor".into()], f.id(), &schedule, |p| {
                let v = levels
                    .iter()
                    .map(|&l| bouleau_yor_residual(&f, p, x, l, &lt.mollifier(l)?))
                    .collect::<Result<Vec<_>>>()?;
                Ok(vec![(v, 0.0)])
            })?;
            ctx.residual_criteria(&outs[0]);
        }
        (LocalTimeCheck::BouleauYor, _) => {
            return Err(Error::Config("localtime.check: bouleau-yor runs on space paths".into()));
        }
        (LocalTimeCheck::Tanaka, Axis::Space) => {
            let names = ["tanaka_positive".to_string(), "tanaka_negative".into(), "tanaka_absolute".into()];
            let outs = ctx.evaluate(&names, "tanaka", &schedule, |p| {
                let a = tanaka_level(p, cfg)?;
                let rs = levels
                    .iter()
                    .map(|&l| tanaka_residual_space(a, p, x, l, &lt.mollifier(l)?))
                    .collect::<Result<Vec<_>>>()?;
                Ok(vec![
                    (rs.iter().map(|r| r.positive).collect(), 0.0),
                    (rs.iter().map(|r| r.negative).collect(), 0.0),
                    (rs.iter().map(|r| r.absolute).collect(), 0.0),
                ])
            })?;
            for o in &outs {
                ctx.residual_criteria(o);
            }
        }
        (LocalTimeCheck::Tanaka, _) => {
            let outs = ctx.evaluate(&["tanaka_time".into()], "tanaka", &schedule, |p| {
                let a = tanaka_level(p, cfg)?;
                let v = levels
                    .iter()
                    .map(|&l| tanaka_residual_time(a, p, t, l, &lt.mollifier(l)?))
                    .collect::<Result<Vec<_>>>()?;
                Ok(vec![(v, 0.0)])
            })?;
            ctx.residual_criteria(&outs[0]);
        }
        (LocalTimeCheck::Mass, _) => {
            let expected = match axis {
                Axis::Time => (t / PI).sqrt(),
                _ => x.abs(),
            };
            let outs = ctx.evaluate(&["mass".into()], "constant", &schedule, |p| {
                let v = levels
                    .iter()
                    .map(|&l| {
                        let k = lt.mollifier(l)?;
                        let est = match axis {
                            Axis::Time => weighted_local_time_grid(p, t, &k, lt.levels)?,
                            _ => local_time_grid_space(p, x, &k, lt.levels)?,
                        };
                        Ok(est.total_mass() / expected)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(vec![(v, 1.0)])
            })?;
            let out = &outs[0];
            let worst = out.gaps(levels.len() - 1).into_iter().fold(0.0, f64::max);
            ctx.diag("mass.expected", expected);
            match ctx.cfg.tolerances.mass_rel_tol {
                Some(tol) => ctx.criteria.push(Criterion::at_most("mass.max_rel_error", worst, tol)),
                None => ctx.diag("mass.max_rel_error", worst),
            }
        }
    }
    Ok(())
}

/// Inequalities whose explicit bound must hold on every draw; the rest are judged
/// by the stability of their fitted constants.
fn requires_full_pass(id: LemmaId) -> bool {
    matches!(id, LemmaId::SpaceCovIncrement | LemmaId::DisjointSpace | LemmaId::TimeDeterminant)
}

fn run_lemmas(ctx: &mut Context) -> Result<()> {
    let spec = ctx.cfg.lemmas.clone();
    let ids: Vec<LemmaId> = if spec.only.trim().is_empty() {
        LemmaId::ALL.to_vec()
    } else {
        spec.only
            .split(',')
            .map(|s| s.trim().parse().map_err(|e| Error::Config(format!("lemmas.only: {e}"))))
            .collect::<Result<_>>()?
    };
    let scales: Vec<f64> = (spec.scale_log10_from..=spec.scale_log10_to).map(|e| 10f64.powi(e)).collect();
    let mut csv = ctx.csv(".csv")?;
    if let Some(w) = csv.as_mut() {
        writeln!(w, "lemma,scale,draws,passed,sup_ratio,inf_ratio,sup_alt_ratio")?;
    }
    let stability = ctx.cfg.tolerances.stability;
    for id in ids {
        let s = sweep(id, &scales, spec.draws, ctx.cfg.seed, &ctx.quad)?;
        if let Some(w) = csv.as_mut() {
            for c in &s.per_scale {
                let alt = c.sup_alt_ratio.map_or(String::new(), |a| format!("{a:e}"));
                writeln!(w, "{id},{:e},{},{},{:e},{:e},{alt}", c.scale, c.draws, c.passed, c.sup_ratio, c.inf_ratio)?;
            }
            w.flush()?;
        }
        let sup = s.per_scale.iter().map(|c| c.sup_ratio).fold(f64::NEG_INFINITY, f64::max);
        ctx.diag(format!("lemmas.{id}.pass_rate"), s.pass_rate);
        ctx.diag(format!("lemmas.{id}.sup_ratio"), sup);
        ctx.diag(format!("lemmas.{id}.sup_spread"), s.sup_spread);
        ctx.diag(format!("lemmas.{id}.inf_spread"), s.inf_spread);
        ctx.diag(format!("lemmas.{id}.draws"), s.draws as f64);
        ctx.diag(format!("lemmas.{id}.rejected"), s.rejected as f64);
        if let Some(a) = s.per_scale.iter().filter_map(|c| c.sup_alt_ratio).reduce(f64::max) {
            ctx.diag(format!("lemmas.{id}.sup_alt_ratio"), a);
            let alts: Vec<f64> = s.per_scale.iter().filter_map(|c| c.sup_alt_ratio).collect();
            let m = median(alts.clone());
            let spread = alts.iter().map(|v| ((v - m) / m).abs()).fold(0.0, f64::max);
            ctx.diag(format!("lemmas.{id}.alt_spread"), spread);
        }
        if requires_full_pass(id) {
            ctx.criteria.push(Criterion::at_least(format!("lemmas.{id}.pass_rate"), s.pass_rate, 1.0));
        } else if let Some(tol) = stability {
            ctx.criteria.push(Criterion::at_most(format!("lemmas.{id}.sup_spread"), s.sup_spread, tol));
            if id == LemmaId::SpaceDeterminant {
                ctx.criteria.push(Criterion::at_most(format!("lemmas.{id}.inf_spread"), s.inf_spread, tol));
            }
        }
    }
    Ok(())
}

fn run_scaling(ctx: &mut Context) -> Result<()> {
    let cfg = ctx.cfg;
    let mode = cfg.scaling.mode;
    let schedule = EpsilonSchedule::dyadic(
        match mode {
            ScalingMode::Time => crate::qcov::ScheduleKind::Temporal,
            _ => crate::qcov::ScheduleKind::Spatial,
        },
        cfg.schedule.unwrap_or_default().from,
        cfg.schedule.unwrap_or_default().to,
    )?;
    let r = scaling_limit_check(mode, cfg.grid.t, cfg.grid.x, &schedule, &ctx.quad)?;
    let mut csv = ctx.csv(".csv")?;
    if let Some(w) = csv.as_mut() {
        writeln!(w, "mode,k,level,ratio")?;
        for c in &r.curves {
            let k = c.k.map_or(String::new(), |k| k.to_string());
            for (l, v) in r.levels.iter().zip(&c.ratios) {
                writeln!(w, "{mode:?},{k},{l:e},{v:e}")?;
            }
        }
        w.flush()?;
    }
    let name = format!("{mode:?}").to_lowercase();
    for (c, f) in r.curves.iter().zip(r.finest()) {
        let key = c.k.map_or(format!("scaling.{name}.finest_ratio"), |k| format!("scaling.{name}.finest_ratio_k{k}"));
        ctx.diag(key, f);
    }
    let tol = ctx.cfg.tolerances.clone();
    match (r.target, mode) {
        (Some(target), _) => {
            if let Some(rt) = tol.ratio_tol {
                ctx.criteria.push(Criterion::within(format!("scaling.{name}.finest_ratio"), r.finest()[0], target, rt));
            }
        }
        (None, _) => {
            let spread = r.spread();
            ctx.diag("scaling.joint.spread", spread);
            if let Some(min) = tol.min_spread {
                ctx.criteria.push(Criterion::exceeds("scaling.joint.spread", spread, min));
            }
        }
    }
    Ok(())
}

fn run_sample(ctx: &mut Context) -> Result<()> {
    let cfg = ctx.cfg;
    let grid = cfg.grid.build(0.0)?;
    let n = cfg.replicates;
    let start = Instant::now();
    let samples: std::sync::Arc<Vec<FieldSample>> = match cfg.sampler.method {
        SamplerKind::Exact => exact_paths(grid.clone(), n, cfg.seed, &ctx.quad, &ctx.sampler)?,
        SamplerKind::Fd => std::sync::Arc::new(fd_integrate(&grid, &cfg.sampler.fd(), n, cfg.seed)?),
    };
    ctx.sampling_seconds += start.elapsed().as_secs_f64();
    if cfg.sampler.write_samples {
        if let Some(mut w) = ctx.csv("_samples.csv")? {
            for s in samples.iter().take(n) {
                writeln!(w, "# replicate {}", s.replicate())?;
                sample_io::write_csv(s, &mut w)?;
            }
            w.flush()?;
        }
    }
    let points: Vec<usize> = (0..grid.len()).filter(|&p| grid.point(p).0 > 0.0).collect();
    let mut csv = ctx.csv(".csv")?;
    if let Some(w) = csv.as_mut() {
        writeln!(w, "t1,x1,t2,x2,empirical,exact,stderr,z,scheme")?;
    }
    let fd = cfg.sampler.fd();
    let mut max_z: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    let mut max_scheme_rel: f64 = 0.0;
    for (a, &p) in points.iter().enumerate() {
        for &q in &points[a..] {
            let (t1, x1) = grid.point(p);
            let (t2, x2) = grid.point(q);
            let prods: Vec<f64> = samples.iter().take(n).map(|s| s.values()[p] * s.values()[q]).collect();
            let agg = mc_aggregate(&prods)?;
            let exact = cov_spacetime(&CovQuery::new(t1, x1, t2, x2)?, &ctx.quad)?.value;
            let se = agg.stderr.unwrap_or(f64::NAN);
            let z = (agg.mean - exact) / se;
            let scheme = match cfg.sampler.method {
                SamplerKind::Fd => fd_covariance(&fd, t1, x1, t2, x2)?,
                SamplerKind::Exact => exact,
            };
            max_z = max_z.max(z.abs());
            if exact > 0.0 {
                max_rel = max_rel.max(((agg.mean - exact) / exact).abs());
                max_scheme_rel = max_scheme_rel.max(((scheme - exact) / exact).abs());
            }
            if let Some(w) = csv.as_mut() {
                writeln!(w, "{t1:e},{x1:e},{t2:e},{x2:e},{:e},{exact:e},{se:e},{z:e},{scheme:e}", agg.mean)?;
            }
        }
    }
    if let Some(w) = csv.as_mut() {
        w.flush()?;
    }
    ctx.diag("sample.max_z", max_z);
    ctx.diag("sample.max_rel_error", max_rel);
    if cfg.sampler.method == SamplerKind::Fd {
        ctx.diag("sample.scheme_max_rel_bias", max_scheme_rel);
    }
    let tol = ctx.cfg.tolerances.clone();
    if let Some(z) = tol.max_z {
        ctx.criteria.push(Criterion::at_most("sample.max_z", max_z, z));
    }
    if let Some(r) = tol.max_rel_error {
        ctx.criteria.push(Criterion::at_most("sample.max_rel_error", max_rel, r));
    }
    Ok(())
}

/// Run one experiment. Writes CSV rows and `<name>.json` when an output directory is set.
pub fn run(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mut ctx = Context {
        cfg,
        quad: QuadratureConfig::default(),
        sampler: SamplerConfig::default(),
        criteria: Vec::new(),
        diagnostics: BTreeMap::new(),
        levels: Vec::new(),
        rate: None,
        sampling_seconds: 0.0,
    };
    match cfg.kind {
        ExperimentKind::Sample => run_sample(&mut ctx)?,
        ExperimentKind::Qv => run_qv(&mut ctx)?,
        ExperimentKind::Pqc => run_pqc(&mut ctx)?,
        ExperimentKind::Ito => run_ito(&mut ctx)?,
        ExperimentKind::Localtime => run_localtime(&mut ctx)?,
        ExperimentKind::Lemmas => run_lemmas(&mut ctx)?,
        ExperimentKind::Scaling => run_scaling(&mut ctx)?,
    }
    let report = RunReport {
        kind: cfg.kind.name().into(),
        software: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).into(),
        config_fingerprint: cfg.fingerprint(),
        seed: cfg.seed,
        replicates: cfg.replicates,
        levels: ctx.levels,
        rate: ctx.rate,
        criteria: ctx.criteria,
        diagnostics: ctx.diagnostics,
        timings: Timings { sampling_seconds: ctx.sampling_seconds, total_seconds: start.elapsed().as_secs_f64() },
    };
    if let Some(dir) = &cfg.output.dir {
        let stem = cfg.output.name.clone().unwrap_or_else(|| cfg.kind.name().to_string());
        report.write(&dir.join(format!("{stem}.json")))?;
    }
    Ok(report)
}
