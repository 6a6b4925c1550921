use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn ptm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptm"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn run(cmd: &str, cfg: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = ptm(&args);
    assert!(
        out.status.success(),
        "{cmd}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn jsonl(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

const GHZ: &str = r#"
state = "ghz"
n_qubits = 4
seed = 3
m = 50
p = 2
partitions = ["A=1-2;B=3-4"]
statistics = ["p2", "p3", "s3"]
"#;

#[test]
fn simulate_writes_one_record_per_unitary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), GHZ);
    let stdout = run("simulate", &cfg, &[]).stdout;
    assert!(String::from_utf8_lossy(&stdout).contains("manifest_simulate.json"));
    let lines = jsonl(&dir.path().join("out/dataset.jsonl"));
    assert_eq!(lines.len(), 51);
    assert_eq!(lines[0]["m"], 50);
    assert_eq!(lines[0]["p"], 2);
    for (i, rec) in lines[1..].iter().enumerate() {
        assert_eq!(rec["r"], i);
        assert_eq!(rec["u"].as_array().unwrap().len(), 4);
        assert_eq!(rec["k"].as_array().unwrap().len(), 2);
    }
}

#[test]
fn command_line_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), GHZ);
    let out = dir.path().join("elsewhere");
    run(
        "simulate",
        &cfg,
        &["--m", "7", "--p", "1", "--out", out.to_str().unwrap()],
    );
    let lines = jsonl(&out.join("dataset.jsonl"));
    assert_eq!(lines.len(), 8);
    assert_eq!(lines[0]["p"], 1);
}

#[test]
fn quench_writes_one_dataset_per_time() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
state = "neel_quench"
n_qubits = 4
m = 10
times_ms = [0.0, 0.5, 2.0]
[hamiltonian]
model = "xy"
j0_per_s = 420.0
alpha = 1.24
"#,
    );
    run("simulate", &cfg, &[]);
    let manifest: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out/manifest_simulate.json")).unwrap(),
    )
    .unwrap();
    let files = manifest["files"].as_array().unwrap();
    assert_eq!(files.len(), 3);
    assert_eq!(files[2]["path"], "dataset_t002.jsonl");
    assert_eq!(files[2]["t_ms"], 2.0);
}

#[test]
fn estimate_reports_moments_and_derived_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), GHZ);
    run("simulate", &cfg, &[]);
    run("estimate", &cfg, &["--emit-plot-data"]);
    let est = jsonl(&dir.path().join("out/estimates_dataset.jsonl"));
    let stats: Vec<&str> = est
        .iter()
        .map(|r| r["statistic"].as_str().unwrap())
        .collect();
    assert_eq!(stats, ["p2", "p3", "s3"]);
    for r in &est {
        assert_eq!(r["m"], 50);
        assert!(r["std_error"].as_f64().unwrap() > 0.0);
    }
    let derived = jsonl(&dir.path().join("out/derived_dataset.jsonl"));
    let quantities: Vec<&str> = derived
        .iter()
        .map(|r| r["quantity"].as_str().unwrap())
        .collect();
    assert_eq!(quantities, ["p2_sq_over_p3", "r3"]);
    let csv = std::fs::read_to_string(dir.path().join("out/fig1c.csv")).unwrap();
    assert!(csv.starts_with("dataset,t_ms,partition,p2,"));
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn r3_is_undefined_when_p3_is_not_positive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
state = "ghz"
n_qubits = 2
seed = 1
m = 3
partitions = ["A=1;B=2"]
statistics = ["p2", "p3", "s3"]
"#,
    );
    run("simulate", &cfg, &[]);
    // With three snapshots the estimates are noisy; scan seeds for a
    // non-positive p3.
    for seed in 0..200 {
        let s = seed.to_string();
        run("simulate", &cfg, &["--seed", &s]);
        run("estimate", &cfg, &[]);
        let est = jsonl(&dir.path().join("out/estimates_dataset.jsonl"));
        let p3 = est[1]["value"].as_f64().unwrap();
        let derived = jsonl(&dir.path().join("out/derived_dataset.jsonl"));
        let r3 = derived.iter().find(|r| r["quantity"] == "r3").unwrap();
        if p3 <= 0.0 {
            assert_eq!(r3["value"], "undefined");
            assert!(r3["reason"].is_string());
            return;
        }
        assert!(r3["value"].is_f64() || r3["value"] == "undefined");
    }
    panic!("no dataset with p3 <= 0 found");
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        "state = \"ghz\"\nn_qubits = 4\nm = 0\n",
        "state = \"ghz\"\nn_qubits = 4\nm = 5\npartitions = [\"A=1;B=9\"]\n",
        "state = \"ghz\"\nn_qubits = 4\nm = 5\nbogus = 1\n",
        "state = \"ghz\"\nn_qubits = 4\n",
    ];
    for text in cases {
        let cfg = write_config(dir.path(), text);
        let out = ptm(&["simulate", "--config", cfg.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: config error"));
    }
    let out = ptm(&["simulate", "--config", "/nonexistent/config.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn estimate_rejects_partition_outside_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), GHZ);
    run("simulate", &cfg, &[]);
    let wider = GHZ
        .replace("n_qubits = 4", "n_qubits = 6")
        .replace("[\"A=1-2;B=3-4\"]", "[\"A=1-2;B=5-6\"]");
    let cfg2 = dir.path().join("wider.toml");
    std::fs::write(&cfg2, wider).unwrap();
    let data = dir.path().join("out/dataset.jsonl");
    let out = ptm(&[
        "estimate",
        "--config",
        cfg2.to_str().unwrap(),
        "--dataset",
        data.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_dataset_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), GHZ);
    let out = ptm(&[
        "estimate",
        "--config",
        cfg.to_str().unwrap(),
        "--dataset",
        dir.path().join("absent.jsonl").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn compare_needs_an_exact_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "state = \"from_file\"\nn_qubits = 2\npartitions = [\"A=1;B=2\"]\n",
    );
    let out = ptm(&["compare", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compare_reports_conditions_per_time_and_partition() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
state = "neel_quench"
n_qubits = 4
times_ms = [0.0, 1.0]
partitions = ["A=1;B=2", "A=1-2;B=3-4"]
[hamiltonian]
model = "xy"
j0_per_s = 420.0
alpha = 1.24
"#,
    );
    run("compare", &cfg, &["--emit-plot-data"]);
    let rows = jsonl(&dir.path().join("out/conditions.jsonl"));
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0]["negativity"], 0.0);
    assert_eq!(rows[0]["p3_ppt_violated"], false);
    let late = &rows[3];
    assert_eq!(late["t_ms"], 1.0);
    if late["p3_ppt_violated"] == true {
        assert_eq!(late["ppt_violated"], true);
    }
}

#[test]
fn werner_reports_root_for_d4_and_none_for_d2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "state = \"werner\"\n[werner]\nalpha_points = 11\n",
    );
    run("werner", &cfg, &["--d", "4"]);
    let report: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out/werner_d4.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["equivalent"], true);
    let root = report["p3_root"].as_f64().unwrap();
    assert!((root - 0.10647).abs() < 1e-4);
    let csv = std::fs::read_to_string(dir.path().join("out/werner_d4.csv")).unwrap();
    assert_eq!(csv.lines().count(), 12);

    run("werner", &cfg, &["--d", "2"]);
    let report: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out/werner_d2.json")).unwrap(),
    )
    .unwrap();
    assert!(report["p3_root"].is_null());
}

#[test]
fn sweep_rejects_unsupported_states() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "state = \"werner\"\n[sweep]\nab_sizes = [2]\nm_grid = [10, 20]\ntrials = 10\n",
    );
    let out = ptm(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_writes_tables_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "state = \"ghz\"\nseed = 2\n[sweep]\nab_sizes = [2]\nm_grid = [20, 40, 80, 160]\ntrials = 10\nstatistics = [\"p2\"]\n",
    );
    run("sweep", &cfg, &["--emit-plot-data"]);
    let table = std::fs::read_to_string(dir.path().join("out/sweep_ghz_p2_ab2.csv")).unwrap();
    assert!(table.starts_with("M,mean_abs_err,stderr,trials,rmse\n"));
    assert_eq!(table.lines().count(), 5);
    let summary: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out/sweep_summary.json")).unwrap(),
    )
    .unwrap();
    assert!((summary[0]["exact"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(dir.path().join("out/fig2a.csv").exists());
}
