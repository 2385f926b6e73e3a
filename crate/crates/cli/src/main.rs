use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use shecheck::harness::{run, Axis, ExperimentConfig, ExperimentKind, RunReport};

#[derive(Parser)]
#[command(name = "shecheck", version, about = "Numerical checks for the stochastic heat equation")]
struct Cli {
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for CSV and JSON output; overrides the config.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// TOML experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the field and compare empirical covariances with the kernel.
    Sample(Overrides),
    /// Quadratic variation along a space or time path.
    Qv(Overrides),
    /// Quadratic covariation of f(path) with the path.
    Pqc(Overrides),
    /// Itô formula residuals.
    Ito(Overrides),
    /// Bouleau-Yor, Tanaka and local-time mass checks.
    Localtime(Overrides),
    /// Random sweeps of the covariance inequalities.
    Lemmas(Overrides),
    /// Analytic scaling limits of the increment variances.
    Scaling(Overrides),
    /// Re-evaluate the criteria recorded in a JSON report.
    Report {
        path: PathBuf,
    },
}

#[derive(Args)]
struct Overrides {
    /// Number of replicates.
    #[arg(short = 'n', long)]
    replicates: Option<usize>,
    /// Test function id from the registry.
    #[arg(long)]
    function: Option<String>,
    /// Path direction: space, time or joint.
    #[arg(long)]
    axis: Option<String>,
    /// Coarsest schedule exponent.
    #[arg(long)]
    from: Option<i32>,
    /// Finest schedule exponent.
    #[arg(long)]
    to: Option<i32>,
    /// Write the resolved config to stdout and exit.
    #[arg(long)]
    print_config: bool,
}

fn config_for(cli: &Cli, kind: ExperimentKind, o: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => ExperimentConfig::new(kind),
    };
    if cfg.kind != kind {
        bail!("config describes a `{}` experiment, not `{}`", cfg.kind.name(), kind.name());
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(d) = &cli.out_dir {
        cfg.output.dir = Some(d.clone());
    }
    if let Some(n) = o.replicates {
        cfg.replicates = n;
    }
    if let Some(f) = &o.function {
        cfg.function.id = f.clone();
    }
    if let Some(a) = &o.axis {
        cfg.grid.axis = match a.as_str() {
            "space" => Axis::Space,
            "time" => Axis::Time,
            "joint" => Axis::Joint,
            other => bail!("--axis: expected space, time or joint, got `{other}`"),
        };
    }
    if o.from.is_some() || o.to.is_some() {
        let mut s = cfg.schedule.unwrap_or_default();
        s.from = o.from.unwrap_or(s.from);
        s.to = o.to.unwrap_or(s.to);
        cfg.schedule = Some(s);
    }
    cfg.validate()?;
    Ok(cfg)
}

/// `Ok(true)` when every criterion passed.
fn execute(cli: &Cli) -> Result<bool> {
    let (kind, o) = match &cli.command {
        Command::Report { path } => {
            let report = RunReport::read(path).with_context(|| format!("reading {}", path.display()))?;
            print!("{}", report.summary());
            return Ok(report.recheck()?);
        }
        Command::Sample(o) => (ExperimentKind::Sample, o),
        Command::Qv(o) => (ExperimentKind::Qv, o),
        Command::Pqc(o) => (ExperimentKind::Pqc, o),
        Command::Ito(o) => (ExperimentKind::Ito, o),
        Command::Localtime(o) => (ExperimentKind::Localtime, o),
        Command::Lemmas(o) => (ExperimentKind::Lemmas, o),
        Command::Scaling(o) => (ExperimentKind::Scaling, o),
    };
    let cfg = config_for(cli, kind, o)?;
    if o.print_config {
        print!("{}", cfg.to_toml()?);
        return Ok(true);
    }
    let report = run(&cfg)?;
    print!("{}", report.summary());
    Ok(report.passed())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(1);
        }
    }
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
