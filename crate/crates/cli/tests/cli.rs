use std::path::Path;
use std::process::{Command, Output};

fn shecheck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shecheck")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn passing_criteria_exit_zero_and_report_rechecks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", "kind = \"scaling\"\nschedule = { from = 4, to = 8 }\n[tolerances]\nratio_tol = 0.01\n");
    let out_dir = dir.path().join("out");
    let o = shecheck(&["--config", &cfg, "--out-dir", out_dir.to_str().unwrap(), "scaling"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS scaling.space.finest_ratio"));
    let json = out_dir.join("scaling.json");
    let o = shecheck(&["report", json.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn failing_criteria_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "j.toml",
        "kind = \"scaling\"\n[scaling]\nmode = \"joint\"\n[tolerances]\nmin_spread = 10.0\n",
    );
    let o = shecheck(&["--config", &cfg, "scaling"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL scaling.joint.spread"));
}

#[test]
fn usage_and_config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(shecheck(&["qv", "--axis", "diagonal"]).status.code(), Some(1));
    assert_eq!(shecheck(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(shecheck(&["--config", "/nonexistent.toml", "qv"]).status.code(), Some(1));
    let cfg = write(dir.path(), "l.toml", "kind = \"lemmas\"\n");
    let o = shecheck(&["--config", &cfg, "qv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lemmas"));
    let o = shecheck(&["qv", "-n", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("replicates"));
}

#[test]
fn print_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = shecheck(&["--seed", "9", "ito", "--function", "sin", "--from", "3", "--to", "7", "--print-config"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("seed = 9"));
    let cfg = write(dir.path(), "i.toml", &text);
    let o = shecheck(&["--config", &cfg, "ito", "--print-config"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), text);
}
