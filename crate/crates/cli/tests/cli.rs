use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tacsim::oracle::OracleConfig;

fn tacsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tacsim"))
        .args(args)
        .env("NO_COLOR", "1")
        .output()
        .expect("spawn tacsim")
}

fn ok(args: &[&str]) -> String {
    let out = tacsim(args);
    assert!(
        out.status.success(),
        "tacsim {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Writes an oracle config and generates its dataset; returns the dataset path.
fn dataset(dir: &Path, seed: u64, ticks: u64, cycles: usize) -> PathBuf {
    let oracle = dir.join(format!("oracle_{seed}.json"));
    fs::write(
        &oracle,
        serde_json::to_string(&OracleConfig::synthetic(seed, ticks, cycles)).unwrap(),
    )
    .unwrap();
    let data = dir.join(format!("data_{seed}.csv"));
    ok(&["gen-data", p(&oracle), p(&data)]);
    data
}

fn experiment(dir: &Path, name: &str, data: &Path, body: Value) -> PathBuf {
    let mut cfg = json!({
        "dataset": data,
        "folds": { "n_folds": 3, "chunk_size": 100, "chunks_per_split": 2, "seed": 3 },
        "combo": 1,
        "seed": 0,
        "output_dir": format!("runs/{name}"),
    });
    for (k, v) in body.as_object().unwrap() {
        cfg[k] = v.clone();
    }
    let path = dir.join(format!("{name}.json"));
    fs::write(&path, cfg.to_string()).unwrap();
    path
}

fn small_gbt() -> Value {
    json!({ "family": "gbt", "params": {
        "eta": 0.3, "gamma": 0.0, "n_estimators": 40, "max_depth": 4, "min_child_weight": 5.0,
        "max_delta_step": 0.0, "subsample": 0.8, "colsample_bytree": 1.0,
        "colsample_bylevel": 1.0, "colsample_bynode": 1.0
    }})
}

fn small_network_b() -> Value {
    json!({ "family": "neural",
        "spec": { "kind": "network_b", "position_widths": [8], "force_widths": [8],
                  "temperature_widths": [4], "trunk_widths": [16], "output_dim": 23 },
        "training": { "batch_size": 64, "lr": 1e-3, "max_epochs": 3 } })
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(tacsim(&["--help"]).status.code(), Some(0));
    assert_eq!(tacsim(&["--version"]).status.code(), Some(0));
}

#[test]
fn usage_error_exits_one() {
    assert_eq!(tacsim(&["train"]).status.code(), Some(1));
    assert_eq!(tacsim(&["no-such-command"]).status.code(), Some(1));
}

#[test]
fn missing_file_exits_two() {
    let out = tacsim(&["train", "missing.json"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("file not found: missing.json"), "{err}");
}

#[test]
fn malformed_experiment_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{ not json").unwrap();
    assert_eq!(tacsim(&["evaluate", p(&path)]).status.code(), Some(2));
    // Valid JSON that is not an experiment is a configuration error.
    fs::write(&path, r#"{"dataset": 3}"#).unwrap();
    assert_eq!(tacsim(&["evaluate", p(&path)]).status.code(), Some(1));
}

#[test]
fn invalid_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path(), 1, 300, 1);
    let exp = experiment(
        dir.path(),
        "bad_combo",
        &data,
        json!({ "model": { "preset": "naive" }, "combo": 9 }),
    );
    assert_eq!(tacsim(&["evaluate", p(&exp)]).status.code(), Some(1));
    let exp = experiment(
        dir.path(),
        "no_temp",
        &data,
        json!({ "model": { "preset": "naive" }, "eval_temperature": "dataset_mean" }),
    );
    assert_eq!(tacsim(&["evaluate", p(&exp)]).status.code(), Some(1));
}

#[test]
fn gen_data_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dataset(dir.path(), 4, 400, 1);
    let b = dir.path().join("again.csv");
    ok(&["gen-data", p(&dir.path().join("oracle_4.json")), p(&b)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn calibrate_reports_and_writes_offset() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path(), 6, 3000, 10);
    let layout = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../experiments/layout.json");
    let out = dir.path().join("offset.json");
    let report: Value = serde_json::from_str(&ok(&[
        "calibrate",
        p(&data),
        p(&layout),
        "--steps",
        "200",
        "--out",
        p(&out),
    ]))
    .unwrap();
    assert!(report["n_probes"].as_u64().unwrap() > 0);
    assert!(report["final_mean_dist_mm"].as_f64().unwrap() <= report["initial_mean_dist_mm"].as_f64().unwrap());
    let offset: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(offset["translation_mm"].as_array().unwrap().len(), 3);
}

#[test]
fn gbt_beats_naive_and_compare_reports() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path(), 11, 6000, 24);
    let gbt = experiment(dir.path(), "gbt", &data, json!({ "model": small_gbt() }));
    let naive = experiment(dir.path(), "naive", &data, json!({ "model": { "preset": "naive" } }));
    let g: Value = serde_json::from_str(&ok(&["evaluate", p(&gbt)])).unwrap();
    let n: Value = serde_json::from_str(&ok(&["evaluate", p(&naive)])).unwrap();
    assert!(
        g["nmae_all"].as_f64().unwrap() < n["nmae_all"].as_f64().unwrap(),
        "{g} vs {n}"
    );

    let runs = dir.path().join("runs");
    let summary: Value = serde_json::from_str(&fs::read_to_string(runs.join("gbt/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["folds"], 3);
    assert_eq!(summary["fold_nmae"].as_array().unwrap().len(), 3);

    let out = dir.path().join("cmp.json");
    let cmp: Value = serde_json::from_str(&ok(&[
        "compare",
        p(&runs.join("gbt/results.csv")),
        p(&runs.join("naive/results.csv")),
        "--out",
        p(&out),
    ]))
    .unwrap();
    assert!(cmp["ttest"]["mean_diff"].as_f64().unwrap() < 0.0);
    assert_eq!(cmp["ttest"]["k"], 3);
    assert!(out.exists());
}

#[test]
fn evaluate_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path(), 12, 1200, 6);
    let exp = experiment(dir.path(), "gbt", &data, json!({ "model": small_gbt() }));
    let results = dir.path().join("runs/gbt/results.csv");
    ok(&["evaluate", p(&exp)]);
    let first = fs::read(&results).unwrap();
    ok(&["evaluate", p(&exp)]);
    assert_eq!(first, fs::read(&results).unwrap());
}

#[test]
fn train_saves_models_that_bench() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path(), 13, 1200, 4);
    let exp = experiment(
        dir.path(),
        "nb",
        &data,
        json!({ "model": small_network_b(), "temperature": true }),
    );
    ok(&["train", p(&exp)]);
    let run = dir.path().join("runs/nb");
    let curves = fs::read_to_string(run.join("curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 1 + 3 * 3);
    assert!(run.join("fold_plan.json").exists());
    let model = run.join("models/fold_0.tsnn");
    let rep: Value = serde_json::from_str(&ok(&["bench", p(&model), "--n", "5"])).unwrap();
    assert_eq!(rep["n_inputs"], 5);
    assert!(rep["min_ms"].as_f64().unwrap() <= rep["mean_ms"].as_f64().unwrap());
    assert_eq!(tacsim(&["bench", p(&model), "--n", "0"]).status.code(), Some(1));
}

#[test]
fn sweep_and_fixed_temperature_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path(), 14, 1200, 6);
    let exp = experiment(
        dir.path(),
        "nb",
        &data,
        json!({ "model": small_network_b(), "temperature": true }),
    );
    let s: Value = serde_json::from_str(&ok(&["sweep-temp", p(&exp), "--points", "5"])).unwrap();
    assert_eq!(s["grid_points"], 5);
    let best = s["best_fixed_nmae"].as_f64().unwrap();
    let csv = fs::read_to_string(dir.path().join("runs/nb/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert_eq!(csv.lines().next().unwrap(), "tdc,fold_0,fold_1,fold_2,mean");
    let min_mean = csv
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .fold(f64::INFINITY, f64::min);
    assert_eq!(best, min_mean);

    let fixed = experiment(
        dir.path(),
        "nb_fixed",
        &data,
        json!({ "model": small_network_b(), "temperature": true, "eval_temperature": "dataset_mean" }),
    );
    let f: Value = serde_json::from_str(&ok(&["evaluate", p(&fixed)])).unwrap();
    let t = f["eval_temperature"].as_f64().unwrap();
    assert!((t - s["dataset_mean_tdc"].as_f64().unwrap()).abs() < 1e-9);
    assert!((f["nmae_all"].as_f64().unwrap() - s["dataset_mean_nmae"].as_f64().unwrap()).abs() < 1e-12);
}
