use std::path::Path;
use std::process::{Command, Output};

use gfflab::experiment::{run_experiment, ExperimentConfig, ExperimentKind};

fn gfflab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gfflab")).args(args).output().expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn passing_run_exits_zero_and_writes_both_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b");
    let o = gfflab(&["gff", "boundary", "--samples", "2000", "--mesh", "0.03125", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&read(&out, "report.json")).unwrap();
    assert_eq!(report["experiment"], "boundary");
    assert_eq!(report["passed"], true);
    assert_eq!(report["config_hash"].as_str().unwrap().len(), 64);
    assert!(read(&out, "data.csv").starts_with("r_in,r_out,variance,se,exact\n"));
}

#[test]
fn statistical_failure_exits_one_and_still_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lv");
    let o = gfflab(&["gff", "log-variance", "--samples", "1000", "--seed", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&read(&out, "report.json")).unwrap();
    assert_eq!(report["passed"], false);
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL slope_stability"));
}

#[test]
fn malformed_config_exits_two_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "experiment = \"wick\"\nsamlpes = 3\n").unwrap();
    let o = gfflab(&["gff", "wick", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("samlpes"));

    std::fs::write(&cfg, "experiment = \"markov\"\nsamples = 5000\n").unwrap();
    let o = gfflab(&["gff", "markov", "--config", cfg.to_str().unwrap(), "--mesh", "2.0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mesh"));

    let o = gfflab(&["gff", "wick", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "config names a different experiment");

    let o = gfflab(&["gff", "no-such-experiment"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flags_override_file_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "experiment = \"boundary\"\nseed = 3\nsamples = 1000\nmesh = 0.03125\n").unwrap();
    let out = dir.path().join("o");
    let o = gfflab(&["gff", "boundary", "--config", cfg.to_str().unwrap(), "--seed", "8", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&read(&out, "report.json")).unwrap();
    assert_eq!(report["seed"], 8);
    assert_eq!(report["config"]["samples"], 1000);
}

#[test]
fn reruns_and_thread_counts_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "1"), ("c", "3")] {
        let out = dir.path().join(name);
        let o = gfflab(&[
            "bridge", "suite", "--samples", "2000", "--seed", "5", "--threads", threads, "--out", out.to_str().unwrap(),
        ]);
        assert!(matches!(o.status.code(), Some(0 | 1)));
        reports.push((read(&out, "report.json"), read(&out, "data.csv")));
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[0], reports[2]);
}

#[test]
fn library_runs_are_pool_independent() {
    let cfg = ExperimentConfig {
        experiment: Some(ExperimentKind::Markov),
        mesh: Some(1.0 / 16.0),
        samples: Some(1000),
        ..Default::default()
    }
    .resolve()
    .unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| run_experiment(&cfg)).unwrap();
    let b = four.install(|| run_experiment(&cfg)).unwrap();
    assert_eq!(a.report.to_json().unwrap(), b.report.to_json().unwrap());
    assert_eq!(a.data.to_csv(), b.data.to_csv());
}
