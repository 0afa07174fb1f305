use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use samp_cli::manifest::{sha256_hex, Manifest, MANIFEST_FILE};
use samp_core::io::save_model;
use samp_core::model::Model;
use samp_core::Tensor;
use serde_json::Value;

fn samp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_samp"))
        .args(args)
        .env_remove("SAMP_SEED")
        .output()
        .unwrap()
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

/// Small generated dataset and a model trained on it.
fn trained(dir: &Path) -> (PathBuf, PathBuf) {
    let data = dir.join("data");
    ok(samp(&["--out-dir", s(&data), "gen-data", "--train-size", "120", "--heldout-size", "12"]));
    let model = dir.join("model");
    ok(samp(&[
        "--out-dir",
        s(&model),
        "train-fixture",
        "--dataset",
        s(&data.join("train.csv")),
        "--epochs",
        "60",
    ]));
    (model.join("model.json"), data.join("heldout.csv"))
}

#[test]
fn missing_dataset_exits_2_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere/train.csv");
    let out = samp(&["--out-dir", s(dir.path()), "train-fixture", "--dataset", s(&missing)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(s(&missing)));
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"step_pixles": 3}"#).unwrap();
    let out = samp(&["--config", s(&cfg), "verify"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn training_is_reproducible_and_accurate() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(samp(&["--out-dir", s(&data), "gen-data"]));
    let mut sums = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        ok(samp(&["--out-dir", s(&out), "train-fixture", "--dataset", s(&data.join("train.csv"))]));
        let log = json(out.join("train_log.json"));
        assert!(log["final_accuracy"].as_f64().unwrap() >= 0.95, "{log}");
        assert_eq!(log["seed"], 0);
        sums.push((
            sha256_hex(&std::fs::read(out.join("model.json")).unwrap()),
            sha256_hex(&std::fs::read(out.join("model.bin")).unwrap()),
        ));
    }
    assert_eq!(sums[0], sums[1]);
}

#[test]
fn seed_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let gen = |name: &str, env: Option<&str>, extra: &[&str]| {
        let out = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_samp"));
        cmd.env_remove("SAMP_SEED");
        if let Some(v) = env {
            cmd.env("SAMP_SEED", v);
        }
        cmd.args(["--out-dir", s(&out)]).args(extra).args(["gen-data", "--train-size", "5"]);
        assert!(cmd.status().unwrap().success());
        std::fs::read(out.join("train.csv")).unwrap()
    };
    let flag = gen("flag", None, &["--seed", "5"]);
    let env = gen("env", Some("5"), &[]);
    let default = gen("default", None, &[]);
    let both = gen("both", Some("9"), &["--seed", "5"]);
    assert_eq!(flag, env);
    assert_eq!(flag, both);
    assert_ne!(flag, default);

    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"seed": 0}"#).unwrap();
    let config = gen("config", Some("5"), &["--config", s(&cfg)]);
    assert_eq!(config, default);
}

#[test]
fn linear_model_attribution_is_complete() {
    let dir = tempfile::tempdir().unwrap();
    let model = Model::linear(
        Tensor::new(vec![2, 4], vec![0.5, -1.0, 2.0, 0.25, 1.0, 1.0, -1.0, 0.0]).unwrap(),
        Tensor::from_vec(vec![0.1, -0.2]).unwrap(),
    )
    .unwrap();
    let model_path = dir.path().join("linear.json");
    save_model(&model, &model_path).unwrap();
    let input = dir.path().join("x.csv");
    std::fs::write(&input, "0.2,0.9,0.4,0.7,0\n").unwrap();
    let out = dir.path().join("out");
    for method in ["samp", "samp++", "ig"] {
        let stdout = ok(samp(&[
            "--out-dir",
            s(&out),
            "attribute",
            "--model",
            s(&model_path),
            "--input",
            s(&input),
            "--class",
            "0",
            "--baseline",
            "black",
            "--method",
            method,
        ]));
        let gap: f64 = stdout
            .lines()
            .find_map(|l| l.strip_prefix("completeness_gap "))
            .unwrap()
            .parse()
            .unwrap();
        assert!(gap < 1e-9, "{method}: {stdout}");
        assert!(stdout.contains("variance_objective"));
    }
}

#[test]
fn attribute_artifacts_per_method_and_direction() {
    let dir = tempfile::tempdir().unwrap();
    let (model, heldout) = trained(dir.path());
    let out = dir.path().join("attr");
    for method in ["ig", "samp"] {
        ok(samp(&[
            "--out-dir",
            s(&out),
            "attribute",
            "--model",
            s(&model),
            "--input",
            s(&heldout),
            "--row",
            "3",
            "--method",
            method,
            "--direction",
            "both",
        ]));
    }
    let manifest = Manifest::load(&out.join(MANIFEST_FILE)).unwrap();
    let ig: Vec<&str> = manifest.runs["attribute:ig"].artifacts.iter().map(|a| a.path.as_str()).collect();
    let sp: Vec<&str> = manifest.runs["attribute:samp"].artifacts.iter().map(|a| a.path.as_str()).collect();
    assert!(ig.iter().all(|p| p.starts_with("ig_")), "{ig:?}");
    assert!(sp.iter().all(|p| p.starts_with("samp_")), "{sp:?}");
    for name in [
        "samp_attribution.csv",
        "samp_to_baseline_attribution.csv",
        "samp_to_target_attribution.csv",
        "samp_path_to_baseline.bin",
        "samp_path_to_target.bin",
        "samp_saliency.pgm",
    ] {
        assert!(sp.contains(&name), "{name} missing from {sp:?}");
    }

    for slug in ["ig", "samp"] {
        let summary = json(out.join(format!("{slug}_summary.json")));
        for part in ["to_baseline", "to_target"] {
            if let Some(p) = summary[part].as_object() {
                assert!(p["telescoping_error"].as_f64().unwrap() <= 1e-9);
            }
        }
    }
    // Summed attribution equals the two directions added up.
    let read = |name: &str| -> Vec<f64> {
        std::fs::read_to_string(out.join(name))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
            .collect()
    };
    let (sum, back, forth) = (
        read("samp_attribution.csv"),
        read("samp_to_baseline_attribution.csv"),
        read("samp_to_target_attribution.csv"),
    );
    for i in 0..sum.len() {
        assert!((sum[i] - back[i] - forth[i]).abs() < 1e-12);
    }
}

#[test]
fn dimension_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let (model, _) = trained(dir.path());
    let input = dir.path().join("short.csv");
    std::fs::write(&input, "0.1,0.2,0.3\n").unwrap();
    let out = samp(&["--out-dir", s(dir.path()), "attribute", "--model", s(&model), "--input", s(&input)]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn evaluate_table_curves_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (model, heldout) = trained(dir.path());
    let out = dir.path().join("eval");
    ok(samp(&[
        "--out-dir",
        s(&out),
        "--threads",
        "3",
        "evaluate",
        "--model",
        s(&model),
        "--dataset",
        s(&heldout),
        "--inputs",
        "6",
    ]));
    let report = json(out.join("evaluate.json"));
    let methods = report["methods"].as_array().unwrap();
    assert_eq!(methods.len(), 3);
    for row in methods {
        for metric in ["deletion", "insertion"] {
            assert!(row[metric]["mean"].is_f64() && row[metric]["std"].is_f64());
        }
    }
    assert!(out.join("curves/samp_pp/005_insertion.csv").exists());

    let manifest = Manifest::load(&out.join(MANIFEST_FILE)).unwrap();
    let run = &manifest.runs["evaluate"];
    assert_eq!(run.config_hash, report["config_hash"].as_str().unwrap());
    for a in &run.artifacts {
        let bytes = std::fs::read(out.join(&a.path)).unwrap();
        assert_eq!(a.sha256, sha256_hex(&bytes), "{}", a.path);
    }

    // Thread count does not change results.
    let single = dir.path().join("eval1");
    ok(samp(&[
        "--out-dir",
        s(&single),
        "evaluate",
        "--model",
        s(&model),
        "--dataset",
        s(&heldout),
        "--inputs",
        "6",
    ]));
    assert_eq!(
        std::fs::read(out.join("evaluate.json")).unwrap(),
        std::fs::read(single.join("evaluate.json")).unwrap()
    );
}

#[test]
fn sweeps_write_one_table_per_parameter() {
    let dir = tempfile::tempdir().unwrap();
    let (model, heldout) = trained(dir.path());
    let out = dir.path().join("sweep");
    ok(samp(&[
        "--out-dir",
        s(&out),
        "sweep",
        "--model",
        s(&model),
        "--dataset",
        s(&heldout),
        "--inputs",
        "12",
    ]));
    let rows = |name: &str| std::fs::read_to_string(out.join(name)).unwrap().lines().count() - 1;
    assert_eq!(rows("sweep_eta.csv"), 3);
    assert_eq!(rows("sweep_lambda.csv"), 4);
    assert_eq!(rows("sweep_direction.csv"), 3);
    assert_eq!(rows("sweep_sensitivity.csv"), 3);
    let header = std::fs::read_to_string(out.join("sweep_lambda.csv")).unwrap();
    assert!(header.starts_with("lambda,deletion_mean"));
}

#[test]
fn verify_reports_counts_and_covariance() {
    let dir = tempfile::tempdir().unwrap();
    let out = samp(&["--out-dir", s(dir.path()), "verify", "--trials", "20000", "--brute-force-instances", "10"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains(r#""count":24,"d":4"#), "{stdout}");
    assert!(stdout.contains("mean_off_diagonal_cov") && stdout.contains("typical_cov_se"));
    let report = json(dir.path().join("verify.json"));
    let all_pass = report["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true);
    assert_eq!(out.status.code(), Some(if all_pass { 0 } else { 1 }));
}
