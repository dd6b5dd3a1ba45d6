// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn spinscale(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinscale"))
        .args(args)
        .env_remove("SPINSCALE_WORKERS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> String {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn decay_config() -> Value {
    json!({
        "name": "small_decay",
        "system": {"geometry": {"kind": "random_cluster"}, "n_spins": 5, "rms_coupling": 1e4, "seed": 3},
        "sequence": {"kind": "p8", "deltas": [0.2, 0.3], "taus": [2e-6]},
        "protocol": {"kind": "decay"},
        "time_grid": {"kind": "cycles", "count": 40, "stride": 2}
    })
}

fn run(cfg: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["--out", out.to_str().unwrap(), "run", "--config", cfg];
    args.extend_from_slice(extra);
    spinscale(&args)
}

fn curve_files(out: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(out.join("curves"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn backward_scaling_above_half_is_a_validation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "name": "too_fast",
        "system": {"geometry": {"kind": "random_cluster"}, "n_spins": 4, "rms_coupling": 1e4},
        "sequence": {"kind": "p8", "deltas": [0.6], "taus": [1e-5]},
        "protocol": {"kind": "echo"},
        "time_grid": {"kind": "cycles", "count": 4, "stride": 1}
    });
    let path = write_config(dir.path(), "c.json", &cfg);
    let o = run(&path, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("backward scaling exceeds 1/2"), "{}", stderr(&o));
    assert!(!dir.path().join("out/result.json").exists());
}

#[test]
fn schema_error_reports_the_key_path() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = decay_config();
    cfg["time_grid"]["strides"] = json!(3);
    let path = write_config(dir.path(), "c.json", &cfg);
    let o = run(&path, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`time_grid`"), "{}", stderr(&o));
    assert!(stderr(&o).contains("strides"), "{}", stderr(&o));
}

#[test]
fn capacity_is_checked_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = decay_config();
    cfg["system"]["n_spins"] = json!(15);
    let path = write_config(dir.path(), "c.json", &cfg);
    let o = run(&path, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("system.n_spins"), "{}", stderr(&o));
}

#[test]
fn missing_config_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path().join("absent.json").to_str().unwrap(), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn repeated_runs_write_identical_bytes_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "c.json", &decay_config());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run(&path, &a, &["--force"]).status.success());
    let o = spinscale(&["--workers", "3", "--out", b.to_str().unwrap(), "run", "--config", &path]);
    assert!(o.status.success(), "{}", stderr(&o));
    let fa = curve_files(&a);
    assert_eq!(fa.len(), 2);
    assert_eq!(fa, curve_files(&b));
    assert_eq!(fs::read(a.join("collapse.csv")).unwrap(), fs::read(b.join("collapse.csv")).unwrap());
}

#[test]
fn cached_cells_are_skipped_unless_forced() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "c.json", &decay_config());
    let out = dir.path().join("out");
    assert!(run(&path, &out, &[]).status.success());
    let cached = |o: &Output| -> u64 {
        assert!(o.status.success(), "{}", stderr(o));
        let record: Value = serde_json::from_slice(&fs::read(out.join("result.json")).unwrap()).unwrap();
        record["cells"].as_array().unwrap().iter().filter(|c| c["cached"] == json!(true)).count() as u64
    };
    assert_eq!(cached(&run(&path, &out, &[])), 2);
    assert_eq!(cached(&run(&path, &out, &["--force"])), 0);

    // a changed cell parameter misses the cache for that cell only
    let mut cfg = decay_config();
    cfg["sequence"]["deltas"] = json!([0.2, 0.25]);
    let path2 = write_config(dir.path(), "c2.json", &cfg);
    assert_eq!(cached(&run(&path2, &out, &[])), 1);
}

#[test]
fn csv_outputs_carry_units() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "c.json", &decay_config());
    let out = dir.path().join("out");
    assert!(run(&path, &out, &[]).status.success());
    let text = fs::read_to_string(out.join("curves/delta0.2_tau2e-6.csv")).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header, "time (s),self_time (s),P (1)");
    assert_eq!(text.lines().count(), 41);
}

#[test]
fn analyze_writes_fit_results() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "c.json", &decay_config());
    let out = dir.path().join("out");
    assert!(run(&path, &out, &[]).status.success());
    let o = spinscale(&["analyze", out.to_str().unwrap(), "--model", "abragam"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let fits: Value = serde_json::from_slice(&fs::read(out.join("fits/abragam.json")).unwrap()).unwrap();
    let first = &fits["fits"][0]["fit"];
    assert_eq!(first["model"], json!("abragam"));
    for p in ["w", "h"] {
        assert!(first["parameters"][p]["value"].as_f64().unwrap().is_finite());
    }
    assert!(first["derived"]["T2"].as_f64().unwrap() > 0.0);
}

#[test]
fn analyze_without_matching_curves_fails() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "c.json", &decay_config());
    let out = dir.path().join("out");
    assert!(run(&path, &out, &[]).status.success());
    let o = spinscale(&["analyze", out.to_str().unwrap(), "--model", "gaussian_mqc"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no curves matched"), "{}", stderr(&o));
}

#[test]
fn plotdata_for_mqc_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "name": "mqc",
        "system": {"geometry": {"kind": "chain", "spacing": 1.0}, "n_spins": 6, "rms_coupling": 1.0},
        "sequence": {"mode": "ideal", "deltas": [0.5, 1.0]},
        "protocol": {"kind": "mqc", "q_steps": 16},
        "time_grid": {"kind": "linear", "stop": 4.0, "points": 9}
    });
    let path = write_config(dir.path(), "c.json", &cfg);
    let out = dir.path().join("out");
    assert!(run(&path, &out, &[]).status.success());
    let o = spinscale(&["plotdata", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(out.join("plots/fig3_spincount.csv")).unwrap();
    let mut rows = table.lines();
    assert!(rows.next().unwrap().contains("self_time (s)"));
    // t = 0 carries no spin count
    assert_eq!(rows.count(), 2 * 8);
    assert!(out.join("plots/mqc_spectra.csv").exists());
}

#[test]
fn registry_grows_once_per_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let reg = dir.path().join("reg.json");
    let reg = reg.to_str().unwrap();
    let add = || spinscale(&["sequences", "register", "--registry", reg, "--delta", "0.25", "--tau", "1e-5"]);
    let first = add();
    assert!(first.status.success(), "{}", stderr(&first));
    assert!(String::from_utf8_lossy(&first.stdout).starts_with("registered"));
    assert!(String::from_utf8_lossy(&add().stdout).starts_with("already present"));
    let list = spinscale(&["sequences", "list", "--registry", reg]);
    assert!(String::from_utf8_lossy(&list.stdout).starts_with("1 records"));
}
