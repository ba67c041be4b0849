//! End-to-end checks of the binary: output formats, exit codes, and
//! byte-level determinism.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dyadic-bellman"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn eval_reports_closed_forms() {
    let out = run(&["eval", "--g", "-2", "--f", "0", "--F", "1"]);
    assert!(out.status.success());
    let doc = stdout_json(&out);
    assert_eq!(doc["B"], 0.75);
    assert_eq!(doc["M"], 0.75);
    assert_eq!(doc["characteristics"]["t"], 0.5);

    let rotated = run(&["eval", "--g", "1", "--f", "1", "--F", "1", "--coords", "y"]);
    assert!(rotated.status.success());
    assert_eq!(stdout_json(&rotated)["M"], 0.75);
}

#[test]
fn eval_rejects_points_outside_domain() {
    let out = run(&["eval", "--g", "0", "--f", "2", "--F", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("domain"), "stderr: {err}");
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_passes_and_is_deterministic() {
    let args = ["verify", "--suite", "main-inequality", "--samples", "2000", "--seed", "9"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "verify output must be byte-identical");
    let doc = stdout_json(&a);
    assert_eq!(doc["passed"], true);
    assert_eq!(doc["samples"], 2000);
    assert_eq!(doc["seed"], 9);
    assert!(doc["version"].is_string());

    let bad = run(&["verify", "--suite", "bogus", "--samples", "10", "--seed", "1"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn threads_flag_does_not_change_output() {
    let one = run(&[
        "--threads", "1", "verify", "--suite", "concavity", "--samples", "5000", "--seed", "11",
    ]);
    let four = run(&[
        "--threads", "4", "verify", "--suite", "concavity", "--samples", "5000", "--seed", "11",
    ]);
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn extremize_writes_certificate_and_pair() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pair.json");
    let path_str = path.to_str().unwrap();
    let args = [
        "extremize", "--F", "1", "--r", "2", "--N", "2", "--nfp", "4", "--out", path_str,
    ];
    let a = run(&args);
    assert!(a.status.success(), "stderr: {}", String::from_utf8_lossy(&a.stderr));
    let doc = stdout_json(&a);
    let achieved = doc["certificate"]["achieved_measure"].as_f64().unwrap();
    assert!(achieved > 0.5, "achieved {achieved}");
    assert!(doc["certificate"]["predicted_lower_bound"].as_f64().unwrap() <= achieved);
    let pair_bytes = std::fs::read(&path).unwrap();
    let pair: serde_json::Value = serde_json::from_slice(&pair_bytes).unwrap();
    assert!(pair.is_object());

    let b = run(&args);
    assert_eq!(a.stdout, b.stdout, "certificate output must be byte-identical");
    assert_eq!(pair_bytes, std::fs::read(&path).unwrap());
}

#[test]
fn extremize_skips_oversized_pairs_with_a_note() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pair.json");
    let out = run(&[
        "extremize", "--F", "1", "--r", "2", "--N", "3", "--nfp", "6",
        "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(!path.exists(), "oversized pair must not be written");
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("not serialized"), "stderr: {err}");
    let doc = stdout_json(&out);
    assert!(doc["certificate"]["achieved_measure"].as_f64().unwrap() > 0.6);
}

#[test]
fn weaktype_emits_bounded_csv() {
    let args = ["weaktype", "--depth", "4", "--trials", "5", "--seed", "3"];
    let out = run(&args);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "trial,depth,lambda,ratio,two_sided_ratio");
    assert_eq!(lines.len(), 6);
    for (k, line) in lines[1..].iter().enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0].parse::<u64>().unwrap(), k as u64);
        let one: f64 = fields[3].parse().unwrap();
        let two: f64 = fields[4].parse().unwrap();
        assert!(one <= 2.0 + 1e-9 && two <= 4.0 + 1e-9, "row {line}");
    }
    assert_eq!(out.stdout, run(&args).stdout);
}

#[test]
fn dp_emits_grid_csv_and_summary() {
    let args = ["dp", "--nu", "50", "--ng", "50", "--depth", "20"];
    let out = run(&args);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("u,G,V,M_closed_form,gap"));
    for line in lines {
        let gap: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert!(gap <= 0.01, "row {line}");
    }
    let summary: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(summary["suite"], "dp-oracle");
    assert_eq!(summary["passed"], true);

    let again = run(&args);
    assert_eq!(out.stdout, again.stdout);
    assert_eq!(out.stderr, again.stderr);
}

#[test]
fn dp_rejects_misaligned_grids() {
    let out = run(&["dp", "--nu", "37", "--ng", "37", "--depth", "5"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("aligned"), "stderr: {err}");
}

#[test]
fn sweep_compares_all_three_routes() {
    let out = run(&[
        "sweep", "--from", "1", "--to", "2", "--steps", "3", "--r", "3", "--nfp", "8",
        "--grid-cells", "50", "--grid-depth", "30",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "F,M_closed_form,dp_value,extremizer_achieved");
    assert_eq!(lines.len(), 4);
    let want_m = [0.75, 0.9375, 1.0];
    for (k, line) in lines[1..].iter().enumerate() {
        let fields: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(fields[1], want_m[k], "row {line}");
        assert!(fields[2] <= fields[1] + 0.01, "grid value exceeds closed form in {line}");
        assert!(fields[3] <= fields[1] + 1e-9, "achieved exceeds closed form in {line}");
        assert!(fields[3] > 0.5, "achieved too small in {line}");
    }
}
