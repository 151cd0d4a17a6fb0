mod common;

use std::process::Command;

fn hedac() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hedac"))
}

#[test]
fn run_then_assess_reproduces_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let config = common::write_tiny(dir.path());
    let out = dir.path().join("out");
    let status = hedac().arg("--quiet").arg("--output-dir").arg(&out).arg("run").arg(&config).status().unwrap();
    assert!(status.success());
    for f in ["metrics.csv", "trajectories.csv", "trajectories.vtk", "structure.vtk", "report.txt"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("step,t,eta_v,eta_a,"));
    assert_eq!(metrics.lines().count(), 1 + 13);
    let last_eta_a = metrics.lines().last().unwrap().split(',').nth(3).unwrap().to_string();

    let assessed = hedac().arg("assess").arg(&config).arg(out.join("trajectories.csv")).output().unwrap();
    assert!(assessed.status.success());
    let text = String::from_utf8(assessed.stdout).unwrap();
    assert!(text.contains(&last_eta_a), "assess output {text:?} lacks {last_eta_a}");
}

#[test]
fn info_and_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let config = common::write_tiny(dir.path());
    let info = hedac().arg("info").arg(&config).output().unwrap();
    assert!(info.status.success());
    let text = String::from_utf8(info.stdout).unwrap();
    assert!(text.contains("domain nodes"));
    assert!(text.contains("safety bound"));

    let out = dir.path().join("mesh");
    assert!(hedac().arg("--output-dir").arg(&out).arg("mesh").arg(&config).status().unwrap().success());
    assert!(std::fs::read_dir(&out).unwrap().count() >= 1);
}

#[test]
fn usage_and_runtime_errors_have_distinct_codes() {
    let bad = hedac().arg("frobnicate").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let missing = hedac().arg("run").arg("/definitely/not/here.toml").output().unwrap();
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("error"));
}

#[test]
fn unsafe_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = common::write_tiny(dir.path());
    let text = std::fs::read_to_string(&config).unwrap().replace("safety_distance = 0.6", "safety_distance = 0.3");
    std::fs::write(&config, text).unwrap();
    let out = hedac().arg("info").arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("safety"));
}
