use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use impctl::csvlog::{column, read_rows, HEADER};
use impctl::report::{Comparison, SummaryReport};

fn impctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_impctl"))
        .args(args)
        .env_clear()
        .output()
        .expect("binary runs")
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("experiment.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn both_controllers_on_one_scenario_give_two_logs_two_summaries_one_comparison() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = impctl(&["--scenario", "constrained", "--duration", "0.2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        listing(&out),
        [
            "constrained-baseline.csv",
            "constrained-baseline.summary.json",
            "constrained-comparison.json",
            "constrained-proposed.csv",
            "constrained-proposed.summary.json",
        ]
    );
    let rows = read_rows(fs::File::open(out.join("constrained-proposed.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 201);
    assert_eq!(rows[200][0], 0.2);

    let summary: SummaryReport =
        serde_json::from_slice(&fs::read(out.join("constrained-proposed.summary.json")).unwrap()).unwrap();
    assert!(summary.completed && summary.identities_hold);
    assert_eq!(summary.samples, 201);
    assert_eq!(summary.config_hash.len(), 64);
    let cmp: Comparison = serde_json::from_slice(&fs::read(out.join("constrained-comparison.json")).unwrap()).unwrap();
    assert_eq!(cmp.proposed_eta_ss_mean, summary.eta_ss_mean);
}

#[test]
fn free_motion_logs_zero_contact_force() {
    let tmp = tempfile::tempdir().unwrap();
    let o = impctl(&[
        "--scenario",
        "free-motion",
        "--controller",
        "proposed",
        "--duration",
        "0.3",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(listing(tmp.path()), ["free-motion-proposed.csv", "free-motion-proposed.summary.json"]);
    let rows = read_rows(fs::File::open(tmp.path().join("free-motion-proposed.csv")).unwrap()).unwrap();
    let (fx, fy) = (column("Fex").unwrap(), column("Fey").unwrap());
    assert!(rows.iter().all(|r| r[fx] == 0.0 && r[fy] == 0.0));
}

#[test]
fn csv_header_line_is_exact() {
    let tmp = tempfile::tempdir().unwrap();
    let o = impctl(&["--scenario", "static-equilibrium", "--controller", "baseline", "--duration", "0.01", "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success());
    let text = fs::read_to_string(tmp.path().join("static-equilibrium-baseline.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), HEADER.join(","));
    assert_eq!(text.lines().count(), 12);
}

#[test]
fn repeated_invocations_write_identical_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs = [tmp.path().join("a"), tmp.path().join("b")];
    for d in &dirs {
        let o = impctl(&["--duration", "0.25", "--out", d.to_str().unwrap()]);
        assert!(o.status.code().is_some());
    }
    let names = listing(&dirs[0]);
    assert_eq!(names, listing(&dirs[1]));
    assert_eq!(names.iter().filter(|n| n.ends_with(".csv")).count(), 6);
    assert_eq!(names.iter().filter(|n| n.ends_with("comparison.json")).count(), 3);
    for n in &names {
        assert_eq!(fs::read(dirs[0].join(n)).unwrap(), fs::read(dirs[1].join(n)).unwrap(), "{n}");
    }
}

#[test]
fn aborted_run_keeps_partial_log_and_error_marker() {
    let tmp = tempfile::tempdir().unwrap();
    // A straight elbow is singular, so the run stops at its first sample.
    let cfg = write_config(tmp.path(), "scenarios = [\"free-motion\"]\ncontrollers = [\"baseline\"]\n[sim]\ninitial_q = [0.3, 0.0]\n");
    let out = tmp.path().join("out");
    let o = impctl(&["--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(
        listing(&out),
        ["free-motion-baseline.csv", "free-motion-baseline.error", "free-motion-baseline.summary.json"]
    );
    let marker = fs::read_to_string(out.join("free-motion-baseline.error")).unwrap();
    assert!(marker.contains("singular"), "{marker}");
    let summary: SummaryReport =
        serde_json::from_slice(&fs::read(out.join("free-motion-baseline.summary.json")).unwrap()).unwrap();
    assert!(!summary.completed);
    assert_eq!(summary.samples, 0);

    // A later successful run into the same directory clears the marker.
    let cfg = write_config(tmp.path(), "scenarios = [\"free-motion\"]\ncontrollers = [\"baseline\"]\n");
    let o = impctl(&["--config", &cfg, "--out", out.to_str().unwrap(), "--duration", "0.05"]);
    assert!(o.status.success());
    assert!(!out.join("free-motion-baseline.error").exists());
}

#[test]
fn unknown_config_key_is_reported_with_its_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[sim]\ndt = 0.001\nstep = 2\n");
    let o = impctl(&["--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("step") && err.contains("line 3"), "{err}");
}

#[test]
fn validation_lists_every_problem() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[plant]\nm1 = -1.0\n[controller.tde]\ndelay = 0.003\n");
    let o = impctl(&["--config", &cfg, "--dt", "0.002", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("plant.m1") && err.contains("integer multiple"), "{err}");
}

#[test]
fn unknown_scenario_name_is_rejected() {
    let o = impctl(&["--scenario", "orbit"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("constrained"));
}

#[test]
fn check_passes_with_a_stable_design_inertia() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[controller.tde]\ndesign_inertia = [0.3, 0.3]\n");
    let o = impctl(&["--config", &cfg, "--check"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{stdout}");
    assert_eq!(stdout.lines().count(), 5 + 6);
    assert!(stdout.lines().all(|l| l.starts_with("ok")));
    assert!(tmp.path().read_dir().unwrap().count() == 1, "--check writes nothing");
}

#[test]
fn check_reports_failures_through_the_exit_status() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[sim]\ninitial_q = [0.3, 0.0]\n");
    let o = impctl(&["--config", &cfg, "--check", "--scenario", "constrained"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL constrained-proposed identities"));
}
