//! The command-line contract, exercised through the real binary.

use std::path::Path;
use std::process::{Command, Output};

fn texturekit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_texturekit"))
        .args(args)
        .env_remove("TEXTUREKIT_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = texturekit(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// synth, extract, grid and cluster with a small grid; returns the run dir.
fn pipeline(root: &Path) -> std::path::PathBuf {
    let cfg = root.join("config.json");
    std::fs::write(
        &cfg,
        r#"{"augment": {"per_sample_count": 2},
            "grid": {"models": [
                {"kind": "random_forest", "n_trees": 15},
                {"kind": "random_forest", "n_trees": 15, "max_depth": 2},
                {"kind": "svm", "kernel": "linear", "c": 0.01},
                {"kind": "svm", "c": 1.0, "gamma": 0.001}]}}"#,
    )
    .unwrap();
    let run = root.join("run");
    let data = root.join("data");
    let common = ["--config", cfg.to_str().unwrap(), "--run-dir", run.to_str().unwrap()];
    let manifest = ok(&[&["synth", "--out", data.to_str().unwrap(), "--patients", "10", "--noise", "0.2"][..], &common].concat());
    assert_eq!(manifest.trim(), data.join("manifest.csv").to_str().unwrap());
    ok(&[&["extract", "--dataset", manifest.trim()][..], &common].concat());
    ok(&[&["grid"][..], &common].concat());
    ok(&[&["cluster", "--k", "2"][..], &common].concat());
    run
}

#[test]
fn synth_extract_grid_cluster_emits_ranked_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let run = pipeline(dir.path());
    let csv = std::fs::read_to_string(run.join("metrics.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "config_id,auc_mean,auc_std,acc_mean,acc_std,f1_mean,f1_std,sens_mean,sens_std,spec_mean,spec_std,cluster"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    let aucs: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(aucs.windows(2).all(|w| w[0] >= w[1]), "not ranked: {aucs:?}");
    assert!(rows.iter().all(|r| r[0].starts_with("none-16px-") && !r[11].is_empty()));
    let clusters: std::collections::BTreeSet<&str> = rows.iter().map(|r| r[11]).collect();
    assert!(clusters.len() <= 2);

    // Every stage leaves a machine-readable log.
    for cmd in ["synth", "extract", "grid", "cluster"] {
        let log: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(run.join(format!("logs/{cmd}.json"))).unwrap()).unwrap();
        assert_eq!(log["command"], cmd);
        assert!(log["wall_time_s"].as_f64().unwrap() >= 0.0);
        assert!(log["threads"].as_u64().unwrap() >= 1);
        assert!(log["config"]["seed"].is_u64());
    }
    let echo: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(run.join("config.echo")).unwrap()).unwrap();
    assert_eq!(echo["augment"]["per_sample_count"], 2);
}

#[test]
fn train_explain_report_produce_wellformed_svg() {
    let dir = tempfile::tempdir().unwrap();
    let run = pipeline(dir.path());
    let r = run.to_str().unwrap();
    ok(&["train", "--run-dir", r, "--trees", "100", "--max-depth", "0", "--min-leaf", "2", "--min-split", "1"]);
    let model: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("models/model.json")).unwrap()).unwrap();
    assert_eq!(model["kind"], "random_forest");
    assert_eq!(model["params"]["n_trees"], 100);
    assert!(model["var_edges"].is_object());
    ok(&["explain", "--run-dir", r]);
    ok(&["correlate", "--run-dir", r]);
    ok(&["report", "--run-dir", r]);
    for name in ["metrics.svg", "correlation.svg", "shap.svg"] {
        let text = std::fs::read_to_string(run.join("figures").join(name)).unwrap();
        let doc = roxmltree::Document::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(doc.root_element().tag_name().name(), "svg");
        assert!(text.contains("<!-- generated"));
    }
    // Without the timestamp the figures are byte-stable.
    ok(&["report", "--run-dir", r, "--no-timestamp"]);
    let first = std::fs::read(run.join("figures/shap.svg")).unwrap();
    ok(&["report", "--run-dir", r, "--no-timestamp"]);
    assert_eq!(first, std::fs::read(run.join("figures/shap.svg")).unwrap());
}

#[test]
fn failures_map_to_exit_codes_with_one_line_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let r = dir.path().to_str().unwrap();

    let usage = texturekit(&["frobnicate"]);
    assert_eq!(usage.status.code(), Some(2));

    let bad_config = texturekit(&["cv", "--run-dir", r, "--folds", "1"]);
    assert_eq!(bad_config.status.code(), Some(2));
    assert_eq!(String::from_utf8_lossy(&bad_config.stderr).trim().lines().count(), 1);

    let no_input = texturekit(&["train", "--run-dir", r]);
    assert_eq!(no_input.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&no_input.stderr);
    assert_eq!(stderr.trim().lines().count(), 1, "{stderr}");
    assert!(stderr.contains("features.csv"));

    std::fs::write(dir.path().join("features.csv"), "not,a,feature,table\n").unwrap();
    let bad_header = texturekit(&["correlate", "--run-dir", r]);
    assert_eq!(bad_header.status.code(), Some(3));
}

#[test]
fn thread_count_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let r = dir.path().to_str().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_texturekit"))
        .args(["synth", "--run-dir", r, "--patients", "5"])
        .env("TEXTUREKIT_THREADS", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    let log: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("logs/synth.json")).unwrap()).unwrap();
    assert_eq!(log["threads"], 3);
}
