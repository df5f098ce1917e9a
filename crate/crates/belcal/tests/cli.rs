//! End-to-end tests of the installed binary: exit codes, report formats,
//! CSV output, thread-count invariance, and the oracle cross-check flag.

use std::path::Path;
use std::process::{Command, Output};

fn belcal() -> Command {
    Command::new(env!("CARGO_BIN_EXE_belcal"))
}

fn theories() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../theories"))
}

fn robot1d() -> String {
    theories().join("robot1d.bat").display().to_string()
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

#[test]
fn run_prints_the_posterior_in_text_form() {
    let out = run_ok(belcal().args([
        "run",
        &robot1d(),
        "-q",
        "bel (h <= 9) after [sonar(5)]",
    ]));
    let text = stdout(&out);
    assert!(text.contains("theory robot1d"), "header names the theory: {text}");
    assert!(text.contains("value = 0.9759"), "posterior value shown: {text}");
}

#[test]
fn run_emits_machine_readable_json() {
    let out = run_ok(belcal().args([
        "run",
        &robot1d(),
        "-q",
        "bel (h <= 9) after [sonar(5)]",
        "--format",
        "json",
    ]));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("valid json");
    let value = report["queries"][0]["answer"]["value"].as_f64().unwrap();
    assert!((value - 0.9759078335417833).abs() < 1e-12, "value {value}");
    assert_eq!(report["theory"]["name"], "robot1d");
    assert_eq!(report["queries"][0]["answer"]["backend"], "quad");
    assert_eq!(report["theory"]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn flags_reach_the_engine_config() {
    let out = run_ok(belcal().args([
        "run",
        &robot1d(),
        "-q",
        "bel (h <= 9) after [sonar(5)]",
        "--backend",
        "mc",
        "--samples",
        "2000",
        "--seed",
        "7",
        "--format",
        "json",
    ]));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("valid json");
    assert_eq!(report["config"]["backend"], "mc");
    assert_eq!(report["config"]["mc_samples"], 2000);
    assert_eq!(report["config"]["seed"], 7);
    let answer = &report["queries"][0]["answer"];
    assert_eq!(answer["backend"], "mc");
    assert!(answer["stderr"].as_f64().is_some(), "mc reports a standard error");
    assert_eq!(answer["diagnostics"]["samples"], 2000);
    let value = answer["value"].as_f64().unwrap();
    assert!((value - 0.9759).abs() < 0.05, "value {value}");
}

#[test]
fn missing_theory_file_exits_2() {
    let out = belcal()
        .args(["run", "no-such-theory.bat", "-q", "bel (true) after []"])
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_query_exits_2() {
    let out = belcal()
        .args(["run", &robot1d(), "-q", "bel (h <= ) after []"])
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(err.contains("query"), "stderr mentions the query: {err}");
}

#[test]
fn degenerate_normalizer_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stuck.bat");
    std::fs::write(
        &path,
        "theory stuck\nfluent h : real\ninit p = gauss(h; 0, 1)\naction wait() { poss = false }\n",
    )
    .unwrap();
    let out = belcal()
        .args(["run", path.to_str().unwrap(), "-q", "bel (h <= 0) after [wait()]"])
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(1), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn plotdata_streams_csv_with_bins_and_atom() {
    let out = run_ok(belcal().args([
        "plotdata",
        &robot1d(),
        "-q",
        "marginal h after [move(4)] bins=16 range=0,8",
    ]));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("bin_lo,bin_hi,mass"));
    let atom = text.lines().find(|l| l.starts_with("atom,")).expect("an atom row");
    let mass: f64 = atom.rsplit(',').next().unwrap().parse().unwrap();
    assert!((mass - 0.2).abs() < 1e-3, "wall atom mass {mass}");
    assert_eq!(text.lines().count(), 1 + 16 + 1, "header, 16 bins, one atom");
}

#[test]
fn plotdata_out_dir_masses_sum_to_one() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(belcal().args([
        "plotdata",
        &robot1d(),
        "-q",
        "marginal h after [move(4)] bins=16 range=0,8",
        "--out",
        dir.path().to_str().unwrap(),
    ]));
    let csv = std::fs::read_to_string(dir.path().join("marginal_h.csv")).expect("csv written");
    let total: f64 = csv
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-6, "masses sum to {total}");
}

#[test]
fn plotdata_rejects_bel_queries() {
    let out = belcal()
        .args(["plotdata", &robot1d(), "-q", "bel (h <= 9) after []"])
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn thread_count_does_not_change_values() {
    let query = "bel (h <= 9) after [sonar(5)]";
    let value_with = |threads: &str| {
        let out = run_ok(belcal().env("BELCAL_THREADS", threads).args([
            "run",
            &robot1d(),
            "-q",
            query,
            "--backend",
            "mc",
            "--samples",
            "40000",
            "--format",
            "json",
        ]));
        let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        report["queries"][0]["answer"]["value"].as_f64().unwrap()
    };
    let one = value_with("1");
    let three = value_with("3");
    assert_eq!(one.to_bits(), three.to_bits(), "{one} vs {three}");
}

#[test]
fn oracle_flag_reports_a_small_delta() {
    let out = run_ok(belcal().args([
        "run",
        &robot1d(),
        "-q",
        "bel (h <= 9) after [sonar(5)]",
        "--oracle",
        "--format",
        "json",
    ]));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("valid json");
    let oracle = &report["queries"][0]["oracle"];
    let delta = oracle["delta"].as_f64().expect("oracle delta present");
    assert!(delta.abs() <= 2e-3, "engine vs oracle delta {delta}");
}
