use rand::Rng;
use rand_distr::StandardNormal;
use shecheck::harness::config::{ScalingMode, ScheduleSpec};
use shecheck::harness::{
    mc_aggregate, rate_fit, run, scaling_limit_check, Axis, ExperimentConfig, ExperimentKind, RunReport,
};
use shecheck::qcov::{EpsilonSchedule, ScheduleKind};
use shecheck::rng::replicate_rng;
use shecheck::{Error, QuadratureConfig};

#[test]
fn aggregate_examples() {
    let a = mc_aggregate(&[3.0; 10]).unwrap();
    assert_eq!(a.stderr, Some(0.0));
    let a = mc_aggregate(&[0.0, 2.0]).unwrap();
    assert_eq!(a.mean, 1.0);
    assert_eq!(a.stderr, Some(1.0));
    assert_eq!(a.ci_low, Some(1.0 - 1.96));
    let a = mc_aggregate(&[4.0]).unwrap();
    assert_eq!(a.stderr, None);
    let mut rng = replicate_rng(2024, 0);
    let v: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
    assert!(mc_aggregate(&v).unwrap().mean.abs() < 0.05);
}

#[test]
fn rate_examples() {
    let levels = [0.5, 0.25, 0.125, 0.0625];
    let f = rate_fit(&levels, &levels).unwrap();
    assert!((f.alpha - 1.0).abs() < 1e-12 && (f.r2 - 1.0).abs() < 1e-12);
    let sq: Vec<f64> = levels.iter().map(|l| l * l).collect();
    assert!((rate_fit(&levels, &sq).unwrap().alpha - 2.0).abs() < 1e-12);
    let f = rate_fit(&levels, &[1.0, 0.0, 0.5, 0.25]).unwrap();
    assert!(f.floored);
    assert!(rate_fit(&levels[..2], &levels[..2]).is_err());
}

#[test]
fn scaling_limits() {
    let q = QuadratureConfig::default();
    let space = scaling_limit_check(ScalingMode::Space, 1.0, 0.0, &EpsilonSchedule::dyadic(ScheduleKind::Spatial, 4, 8).unwrap(), &q)
        .unwrap();
    let r = space.finest()[0];
    assert!((0.99..=1.01).contains(&r), "{r}");
    let time = scaling_limit_check(ScalingMode::Time, 1.0, 0.0, &EpsilonSchedule::dyadic(ScheduleKind::Temporal, 4, 12).unwrap(), &q)
        .unwrap();
    let r = time.finest()[0];
    assert!((0.99..=1.01).contains(&r), "{r}");
    let joint = scaling_limit_check(ScalingMode::Joint, 1.0, 0.0, &EpsilonSchedule::dyadic(ScheduleKind::Spatial, 3, 7).unwrap(), &q)
        .unwrap();
    assert_eq!(joint.curves.len(), 3);
    assert!(joint.spread() > 0.05, "{}", joint.spread());
}

fn small_qv(dir: &std::path::Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Qv);
    cfg.grid.step_log2 = 8;
    cfg.schedule = Some(ScheduleSpec { from: 5, to: 5 });
    cfg.seed = 7;
    cfg.output.dir = Some(dir.to_path_buf());
    cfg
}

#[test]
fn single_replicate_single_level_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let report = run(&small_qv(dir.path())).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("qv_qv.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2, "{csv}");
    assert!(report.rate.is_none());
    assert!(dir.path().join("qv.json").exists());
}

#[test]
fn identical_runs_give_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_qv(dir.path());
    cfg.replicates = 5;
    cfg.schedule = Some(ScheduleSpec { from: 3, to: 6 });
    cfg.grid.axis = Axis::Time;
    cfg.grid.step_log2 = 9;
    let strip = |mut r: RunReport| {
        r.timings = Default::default();
        r.to_json().unwrap()
    };
    let a = strip(run(&cfg).unwrap());
    let csv_a = std::fs::read(dir.path().join("qv_qv.csv")).unwrap();
    shecheck::harness::clear_path_cache();
    let b = strip(run(&cfg).unwrap());
    let csv_b = std::fs::read(dir.path().join("qv_qv.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(csv_a, csv_b);
}

#[test]
fn report_round_trip_and_recheck() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(ExperimentKind::Scaling);
    cfg.schedule = Some(ScheduleSpec { from: 4, to: 8 });
    cfg.tolerances.ratio_tol = Some(0.01);
    cfg.output.dir = Some(dir.path().to_path_buf());
    let r = run(&cfg).unwrap();
    assert!(r.passed());
    let back = RunReport::read(&dir.path().join("scaling.json")).unwrap();
    assert!(back.recheck().unwrap());
    let mut tampered = back.clone();
    tampered.criteria[0].value = 2.0;
    assert!(tampered.recheck().is_err());
}

#[test]
fn lemma_sweep_runs_from_config() {
    let mut cfg = ExperimentConfig::from_toml(
        r#"
kind = "lemmas"
seed = 1
[lemmas]
draws = 40
only = "time-determinant, increment-bound"
"#,
    )
    .unwrap();
    cfg.tolerances.stability = Some(0.5);
    let r = run(&cfg).unwrap();
    assert_eq!(r.criteria.len(), 2);
    assert!(r.passed(), "{}", r.summary());
}

#[test]
fn validation_names_the_field() {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Qv);
    cfg.replicates = 0;
    match cfg.validate() {
        Err(Error::Config(m)) => assert!(m.starts_with("replicates"), "{m}"),
        other => panic!("{other:?}"),
    }
    let mut cfg = ExperimentConfig::new(ExperimentKind::Pqc);
    cfg.tolerances.max_relative_gap = Some(-1.0);
    match cfg.validate() {
        Err(Error::Config(m)) => assert!(m.contains("max_relative_gap"), "{m}"),
        other => panic!("{other:?}"),
    }
    let mut cfg = ExperimentConfig::new(ExperimentKind::Qv);
    cfg.schedule = Some(ScheduleSpec { from: 4, to: 14 });
    assert!(matches!(cfg.validate(), Err(Error::Config(m)) if m.starts_with("schedule")));
    assert!(ExperimentConfig::from_toml("kind = \"qv\"\nbogus = 1\n").is_err());
}
