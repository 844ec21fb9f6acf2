//! End-to-end tests of the `pw32` binary: pipelines, exit codes, and the
//! file formats the commands exchange.

use std::fs;
use std::process::{Command, Output};

use pw32::{plan_segments, SegmentRunner, SplitStrategy};

fn pw32(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pw32"))
        .args(args)
        .env_remove("PW32_OUT")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn selftest_passes() {
    let out = pw32(&["selftest"]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("checks passed"));
    assert!(text.contains("1011011001"), "3^6 note missing");
    assert!(!text.contains("FAIL"));
}

#[test]
fn run_writes_the_bundle_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");

    let run_a = pw32(&[
        "run", "--n", "40", "--bins-log2", "10",
        "--out", out_a.to_str().unwrap(),
    ]);
    assert_eq!(code(&run_a), 0, "stderr: {}", String::from_utf8_lossy(&run_a.stderr));

    let run_b = pw32(&[
        "run", "--n", "40", "--bins-log2", "10", "--workers", "3", "--balanced",
        "--out", out_b.to_str().unwrap(),
    ]);
    assert_eq!(code(&run_b), 0);

    for name in ["histogram.csv", "histogram.json", "analysis.json", "runtime.json", "monitors.json"] {
        assert!(out_a.join(name).exists(), "{name} missing");
    }

    // Same inputs, any worker count: byte-identical histogram files.
    let csv_a = fs::read(out_a.join("histogram.csv")).unwrap();
    let csv_b = fs::read(out_b.join("histogram.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
    assert_eq!(
        fs::read(out_a.join("analysis.json")).unwrap(),
        fs::read(out_b.join("analysis.json")).unwrap()
    );

    // The known first bins all hold one count.
    let csv = String::from_utf8(csv_a).unwrap();
    for bin in [512, 256, 384, 64, 608, 400, 88, 644, 454, 681, 509, 764, 901, 328] {
        assert!(csv.lines().any(|l| l == format!("{bin},1")), "bin {bin}");
    }
    let total: u64 = csv
        .lines()
        .skip(1)
        .map(|l| l.split_once(',').unwrap().1.parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 40);

    let analysis: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_a.join("analysis.json")).unwrap()).unwrap();
    assert_eq!(analysis["n"], 40);
    assert_eq!(analysis["r"], 1024);
    assert_eq!(analysis["df"], 1023);
    assert_eq!(analysis["method"], "exact-gamma");
    assert!(analysis["p_value"].as_f64().unwrap() > 0.0);
    assert!(analysis["b_finite"].as_f64().is_some());

    let runtime: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_a.join("runtime.json")).unwrap()).unwrap();
    assert_eq!(runtime["n"], 40);
    assert!(runtime["elapsed_seconds"].as_f64().unwrap() >= 0.0);
    assert!(runtime["quadratic_coefficient"].as_f64().is_some());
}

#[test]
fn run_rejects_bad_flags_with_usage_exit() {
    assert_eq!(code(&pw32(&["run", "--n", "0", "--bins-log2", "10", "--out", "/tmp/x"])), 1);
    assert_eq!(code(&pw32(&["run", "--n", "5", "--bins-log2", "0", "--out", "/tmp/x"])), 1);
    assert_eq!(code(&pw32(&["run", "--n", "5", "--bins-log2", "10", "--psi0", "1.0", "--out", "/tmp/x"])), 1);
    // missing required flag is a clap usage error
    assert_eq!(code(&pw32(&["run", "--bins-log2", "10"])), 1);
    // unknown subcommand
    assert_eq!(code(&pw32(&["frobnicate"])), 1);
    // help and version are not errors
    assert_eq!(code(&pw32(&["--help"])), 0);
    assert_eq!(code(&pw32(&["--version"])), 0);
}

#[test]
fn export_round_trips_the_run_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    assert_eq!(
        code(&pw32(&["run", "--n", "60", "--bins-log2", "8", "--out", out.to_str().unwrap()])),
        0
    );
    let ckpt = out.join("checkpoints").join("worker_000.ckpt");
    assert!(ckpt.exists());

    let csv = pw32(&["export", "--checkpoint", ckpt.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(code(&csv), 0);
    assert_eq!(stdout(&csv), fs::read_to_string(out.join("histogram.csv")).unwrap());

    let json_path = dir.path().join("exported.json");
    let json = pw32(&[
        "export", "--checkpoint", ckpt.to_str().unwrap(),
        "--format", "json", "--out", json_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&json), 0);
    assert_eq!(
        fs::read_to_string(&json_path).unwrap(),
        fs::read_to_string(out.join("histogram.json")).unwrap()
    );

    let missing = pw32(&["export", "--checkpoint", "/nonexistent.ckpt", "--format", "csv"]);
    assert_eq!(code(&missing), 2);
}

#[test]
fn resume_completes_a_killed_segment() {
    let dir = tempfile::tempdir().unwrap();
    let straight = dir.path().join("straight");
    assert_eq!(
        code(&pw32(&["run", "--n", "300", "--bins-log2", "8", "--out", straight.to_str().unwrap()])),
        0
    );

    // Kill a mid-flight worker by writing its checkpoint and dropping it.
    let segs = plan_segments(300, 1, SplitStrategy::Even);
    let ckpt = dir.path().join("killed.ckpt");
    let mut runner = SegmentRunner::new(8, segs[0]).unwrap();
    runner.advance(137);
    runner.write_checkpoint(&ckpt).unwrap();
    drop(runner);

    // Wrong expected bin width is refused before any work.
    let mismatch = pw32(&[
        "resume", "--checkpoint", ckpt.to_str().unwrap(), "--bins-log2", "9",
    ]);
    assert_eq!(code(&mismatch), 1);

    let resumed_dir = dir.path().join("resumed");
    let resume = pw32(&[
        "resume", "--checkpoint", ckpt.to_str().unwrap(),
        "--bins-log2", "8",
        "--checkpoint-interval", "50",
        "--out", resumed_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&resume), 0, "stderr: {}", String::from_utf8_lossy(&resume.stderr));
    assert_eq!(
        fs::read_to_string(resumed_dir.join("histogram.csv")).unwrap(),
        fs::read_to_string(straight.join("histogram.csv")).unwrap()
    );

    // Truncated checkpoints are refused with a runtime fault.
    let bytes = fs::read(&ckpt).unwrap();
    fs::write(&ckpt, &bytes[..bytes.len() / 3]).unwrap();
    let truncated = pw32(&["resume", "--checkpoint", ckpt.to_str().unwrap()]);
    assert_eq!(code(&truncated), 2);
}

#[test]
fn merge_then_analyze_matches_a_single_run() {
    let dir = tempfile::tempdir().unwrap();
    let solo = dir.path().join("solo");
    let multi = dir.path().join("multi");
    let merged = dir.path().join("merged");

    assert_eq!(
        code(&pw32(&["run", "--n", "500", "--bins-log2", "9", "--out", solo.to_str().unwrap()])),
        0
    );
    assert_eq!(
        code(&pw32(&[
            "run", "--n", "500", "--bins-log2", "9", "--workers", "3",
            "--out", multi.to_str().unwrap(),
        ])),
        0
    );

    let ckpt_dir = multi.join("checkpoints");
    let mut ckpts: Vec<String> = fs::read_dir(&ckpt_dir)
        .unwrap()
        .map(|e| e.unwrap().path().to_str().unwrap().to_owned())
        .collect();
    ckpts.sort();
    assert_eq!(ckpts.len(), 3);

    let mut args = vec!["merge", "--out", merged.to_str().unwrap()];
    // shuffle the order; merge sorts by segment start
    args.push(&ckpts[2]);
    args.push(&ckpts[0]);
    args.push(&ckpts[1]);
    let merge = pw32(&args);
    assert_eq!(code(&merge), 0, "stderr: {}", String::from_utf8_lossy(&merge.stderr));

    assert_eq!(
        fs::read_to_string(merged.join("histogram.csv")).unwrap(),
        fs::read_to_string(solo.join("histogram.csv")).unwrap()
    );

    let analysis_path = dir.path().join("analysis.json");
    let analyze = pw32(&[
        "analyze", "--histogram", merged.join("histogram.json").to_str().unwrap(),
        "--out", analysis_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&analyze), 0);
    assert_eq!(
        fs::read_to_string(&analysis_path).unwrap(),
        fs::read_to_string(solo.join("analysis.json")).unwrap()
    );

    // Merging overlapping segments is refused.
    let overlap = pw32(&["merge", "--out", merged.to_str().unwrap(), &ckpts[0], &ckpts[0]]);
    assert_eq!(code(&overlap), 2);
}

#[test]
fn env_var_sets_the_default_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let env_out = dir.path().join("from-env");
    let out = Command::new(env!("CARGO_BIN_EXE_pw32"))
        .args(["run", "--n", "10", "--bins-log2", "4"])
        .env("PW32_OUT", env_out.to_str().unwrap())
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(0));
    assert!(env_out.join("analysis.json").exists());
}
