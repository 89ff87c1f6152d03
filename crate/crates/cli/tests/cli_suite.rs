//! End-to-end CLI checks: solve/simulate round trips, byte-level output
//! determinism across runs and worker counts, config-file merging, and the
//! distinct exit codes.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> PathBuf {
    // target/debug/impulse next to the test binary's target dir.
    let mut path = PathBuf::from(env!("CARGO_BIN_EXE_impulse"));
    assert!(path.exists(), "missing binary {}", path.display());
    path.pop();
    path.push("impulse");
    path
}

fn run(args: &[&str], envs: &[(&str, &str)]) -> (i32, String, String) {
    let output = Command::new(bin())
        .args(args)
        .envs(envs.iter().copied())
        .output()
        .expect("spawn impulse");
    (
        output.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&output.stdout).to_string(),
        String::from_utf8_lossy(&output.stderr).to_string(),
    )
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("read {name}: {e}"))
}

#[test]
fn solve_threshold_round_trip_and_reference_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = [
        "solve-threshold",
        "--model",
        "forex",
        "--c",
        "150",
        "--lambda",
        "50",
        "--alpha",
        "0.2",
        "--delta",
        "1.0",
        "--out",
        out,
    ];
    let (code, stdout, stderr) = run(&args, &[]);
    assert_eq!(code, 0, "stderr: {stderr}");
    assert!(stdout.contains("rho*"), "stdout: {stdout}");

    let summary: serde_json::Value =
        serde_json::from_slice(&read(dir.path(), "threshold_solution.json")).unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert!((summary["a_star"].as_f64().unwrap() - 5.066).abs() < 0.02 * 5.066);
    assert!((summary["b_star"].as_f64().unwrap() - 12.1756).abs() < 0.02 * 12.1756);
    assert!((summary["rho_star"].as_f64().unwrap() - 0.042423).abs() < 0.02 * 0.042423);
    assert!(summary["oracle"]["anchored"].as_bool().unwrap());
    assert!(summary["oracle"]["value_agreement_rel"].as_f64().unwrap() < 1e-6);
    let curve1 = read(dir.path(), "threshold_curve.csv");
    assert!(curve1.starts_with(b"x,v,u,region\n"));

    // Round trip: re-running the same configuration reproduces identical
    // curve samples byte for byte.
    let dir2 = tempfile::tempdir().unwrap();
    let args2: Vec<&str> = args
        .iter()
        .map(|s| if *s == out { dir2.path().to_str().unwrap() } else { *s })
        .collect();
    let (code, _, _) = run(&args2, &[]);
    assert_eq!(code, 0);
    assert_eq!(curve1, read(dir2.path(), "threshold_curve.csv"));
    assert_eq!(
        read(dir.path(), "threshold_solution.json"),
        read(dir2.path(), "threshold_solution.json")
    );
}

#[test]
fn emit_diff_is_nonnegative() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = run(
        &[
            "solve-threshold",
            "--model",
            "forex",
            "--delta",
            "1.0",
            "--emit-diff",
            "--no-oracle",
            "--out",
            dir.path().to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(code, 0, "stderr: {stderr}");
    let text = String::from_utf8(read(dir.path(), "threshold_cost_diff.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,cost_delay,cost_nodelay,diff"));
    for line in lines {
        let diff: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(diff >= -1e-9, "negative cost difference: {line}");
    }
}

#[test]
fn simulate_reports_are_deterministic_across_threads_and_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _, stderr) = run(
        &[
            "solve-threshold",
            "--model",
            "forex",
            "--delta",
            "0",
            "--no-oracle",
            "--out",
            out,
        ],
        &[],
    );
    assert_eq!(code, 0, "stderr: {stderr}");
    let solution = dir.path().join("threshold_solution.json");

    let sim_args = |o: &str| {
        vec![
            "simulate".to_string(),
            "--model".into(),
            "forex".into(),
            "--solution".into(),
            solution.to_str().unwrap().to_string(),
            "--x0".into(),
            "0".into(),
            "--paths".into(),
            "4000".into(),
            "--dt".into(),
            "0.05".into(),
            "--horizon".into(),
            "40".into(),
            "--seed".into(),
            "99".into(),
            "--out".into(),
            o.into(),
        ]
    };
    let mut reports = Vec::new();
    for (threads, sub) in [("1", "r1"), ("4", "r4"), ("1", "r1b")] {
        let subdir = dir.path().join(sub);
        std::fs::create_dir_all(&subdir).unwrap();
        let args: Vec<String> = sim_args(subdir.to_str().unwrap());
        let argrefs: Vec<&str> = args.iter().map(String::as_str).collect();
        let (code, _, stderr) = run(&argrefs, &[("IMPULSE_THREADS", threads)]);
        assert_eq!(code, 0, "stderr: {stderr}");
        reports.push(read(&subdir, "simulation_report.json"));
    }
    // Same seed: identical report bytes across 1 and 4 worker threads, and
    // across repeated runs.
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[0], reports[2]);

    let report: serde_json::Value = serde_json::from_slice(&reports[0]).unwrap();
    assert!(report["z_score"].as_f64().unwrap().abs() <= 4.0);
    assert_eq!(report["exclusion_violations"], 0);
}

#[test]
fn config_file_merging_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        r#"
[model]
name = "forex"

[model.params]
c = 150.0
lambda = 50.0
alpha = 0.2
delta = 1.0

[output]
out_dir = "OUTDIR"
"#
        .replace("OUTDIR", dir.path().join("from_config").to_str().unwrap()),
    )
    .unwrap();
    // Flag overrides the file's delta.
    let (code, stdout, stderr) = run(
        &[
            "solve-threshold",
            "--config",
            config.to_str().unwrap(),
            "--delta",
            "0",
            "--no-oracle",
        ],
        &[],
    );
    assert_eq!(code, 0, "stderr: {stderr}");
    assert!(stdout.contains("12.261"), "no-delay trigger expected: {stdout}");
    let summary: serde_json::Value = serde_json::from_slice(&read(
        &dir.path().join("from_config"),
        "threshold_solution.json",
    ))
    .unwrap();
    assert_eq!(summary["model"]["params"]["delta"], 0.0);

    // JSON configs parse too.
    let jconfig = dir.path().join("run.json");
    std::fs::write(
        &jconfig,
        format!(
            r#"{{"model": {{"name": "forex", "params": {{"delta": 1.0}}}}, "output": {{"out_dir": "{}"}}}}"#,
            dir.path().join("fromjson").display()
        ),
    )
    .unwrap();
    let (code, _, stderr) = run(
        &["solve-threshold", "--config", jconfig.to_str().unwrap(), "--no-oracle"],
        &[],
    );
    assert_eq!(code, 0, "stderr: {stderr}");
}

#[test]
fn exit_codes_distinguish_failure_kinds() {
    // Configuration failures -> 2.
    let (code, _, _) = run(&["solve-threshold", "--model", "nosuch"], &[]);
    assert_eq!(code, 2);
    let (code, _, _) = run(
        &["solve-threshold", "--model", "labor"],
        &[], // band model under the threshold solver
    );
    assert_eq!(code, 2);
    let (code, _, stderr) = run(
        &["simulate", "--model", "forex", "--policy", "1,2,3", "--x0", "0"],
        &[],
    );
    assert_eq!(code, 2, "stderr: {stderr}");

    // Simulation failures -> 4 (x0 outside the window).
    let (code, _, stderr) = run(
        &[
            "simulate",
            "--model",
            "forex",
            "--policy",
            "5,12",
            "--x0",
            "1000",
            "--paths",
            "10",
        ],
        &[],
    );
    assert_eq!(code, 4, "stderr: {stderr}");

    // Solver failures -> 3 (no smooth-fit trigger on a tiny window).
    let (code, _, stderr) = run(
        &[
            "solve-threshold",
            "--model",
            "forex",
            "--delta",
            "1.0",
            "--window",
            "-1,2",
            "--no-oracle",
        ],
        &[],
    );
    assert_eq!(code, 3, "stderr: {stderr}");
}

#[test]
fn sweep_emits_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = run(
        &[
            "sweep",
            "--model",
            "forex",
            "--sweep-param",
            "delta",
            "--values",
            "0,0.5,1.0",
            "--out",
            dir.path().to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(code, 0, "stderr: {stderr}");
    let text = String::from_utf8(read(dir.path(), "sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], "delta,a_star,b_star,rho_star,smooth_fit_residual");
    // The trigger must shrink monotonically with the delay.
    let b: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert!(b[0] > b[1] && b[1] > b[2], "triggers {b:?}");

    // Unknown parameter -> config error.
    let (code, _, _) = run(
        &["sweep", "--model", "forex", "--sweep-param", "nope", "--values", "1"],
        &[],
    );
    assert_eq!(code, 2);
}
