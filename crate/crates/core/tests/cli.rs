//! Command-line behaviour: exit codes, outputs and error messages.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_thzjitter"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn value(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no `{key}` in\n{report}"))
        .parse()
        .unwrap()
}

#[test]
fn propagate_writes_beam_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["propagate", "--out-dir", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("beam.txt")).unwrap();
    assert_eq!(stdout(&o), text);
    assert!(text.contains("\na0="));
}

#[test]
fn fit_low_jitter_mean() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["fit", "--mean", "0.988825", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = fs::read_to_string(dir.path().join("fit_report.txt")).unwrap();
    assert!((value(&report, "gamma") - 9.407).abs() < 0.01, "{report}");
    assert!((value(&report, "sigma_theta_deg") - 0.01481).abs() < 1e-4, "{report}");
    assert!(dir.path().join("fit_curves.csv").exists());
}

#[test]
fn unreachable_mean_exits_no_fit() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["fit", "--mean", "1.2", "--out-dir", dir.path().to_str().unwrap()]);
    assert!(stderr(&o).contains("outside (0, 1)"), "{}", stderr(&o));
    assert_eq!(o.status.code(), Some(3));
    let report = fs::read_to_string(dir.path().join("fit_report.txt")).unwrap();
    assert!(report.contains("status=no_fit"), "{report}");
}

#[test]
fn unknown_scenario_key_exits_validation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("typo.ini");
    fs::write(&path, "[signal]\nsmaple_rate = 5e6\n").unwrap();
    let o = run(&[
        "propagate",
        "--scenario",
        path.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(
        err.contains(":2:") && err.contains("smaple_rate") && err.contains("[signal]"),
        "{err}"
    );
}

#[test]
fn aliasing_configuration_exits_validation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("alias.ini");
    fs::write(&path, "[signal]\nf_if_hz = 400e3\nsample_rate_hz = 500e3\n").unwrap();
    let o = run(&[
        "simulate",
        "--scenario",
        path.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn missing_capture_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["analyze", "--out-dir", dir.path().to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).starts_with("error:"));
}

#[test]
fn pdf_and_montecarlo_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let sc = scenario("paper_gaussian_jitter.ini");
    let sc = sc.to_str().unwrap();
    for cmd in ["pdf", "montecarlo"] {
        let o = run(&[cmd, "--scenario", sc, "--seed", "3", "--out-dir", out]);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", stderr(&o));
    }
    for f in [
        "pdf_curves.csv",
        "pdf_curves.svg",
        "montecarlo.txt",
        "montecarlo_histogram.csv",
        "montecarlo.svg",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn simulate_analyze_fit_chain() {
    let dir = tempfile::tempdir().unwrap();
    let src = fs::read_to_string(scenario("paper_driven_1mode.ini")).unwrap();
    let short = dir.path().join("short.ini");
    fs::write(&short, src.replace("duration_s = 1", "duration_s = 0.2")).unwrap();
    let sc = short.to_str().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    for cmd in ["simulate", "analyze"] {
        let o = run(&[cmd, "--scenario", sc, "--out-dir", out]);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", stderr(&o));
    }
    let o = run(&["fit", "--scenario", sc, "--out-dir", out, "--targets", "mean,variance"]);
    assert!(matches!(o.status.code(), Some(0) | Some(3)), "{}", stderr(&o));
    let report = fs::read_to_string(dir.path().join("out/fit_report.txt")).unwrap();
    assert!(
        report.contains("target=mean") && !report.contains("target=peak"),
        "{report}"
    );
}
