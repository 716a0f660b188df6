use doptune::features::FeatureRegistry;
use doptune::models::{save_model, Learned, LinearModel, Model, ModelKind, ModelSpec};
use serde_json::Value;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn doptune(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_doptune"))
        .current_dir(dir)
        .env_remove("DOPTUNE_OUT_DIR")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = doptune(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

/// Small synthetic corpus in `dir/data`.
fn corpus(dir: &Path) {
    ok(dir, &["--seed", "3", "-o", "data", "synth", "--templates-per-kind", "3", "--plans-per-template", "3"]);
}

#[test]
fn synth_writes_plans_latencies_and_templates() {
    let tmp = tempfile::tempdir().unwrap();
    corpus(tmp.path());
    let plans = fs::read_to_string(tmp.path().join("data/plans.ndjson")).unwrap();
    assert_eq!(plans.lines().count(), 36);
    let latencies = fs::read_to_string(tmp.path().join("data/latencies.csv")).unwrap();
    assert_eq!(latencies.lines().next(), Some("plan_id,dop,latency_ms"));
    assert_eq!(latencies.lines().count(), 1 + 36 * 10);
    let templates: Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("data/templates.json")).unwrap()).unwrap();
    assert_eq!(templates.as_array().unwrap().len(), 12);
}

#[test]
fn default_feature_header_has_no_cost_columns() {
    let tmp = tempfile::tempdir().unwrap();
    corpus(tmp.path());
    ok(tmp.path(), &["-o", "feat", "featurize", "--plans", "data/plans.ndjson", "--channels", "count,card,weight"]);
    let csv = fs::read_to_string(tmp.path().join("feat/features.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.contains("count") && header.contains("card") && header.contains("weight"), "{header}");
    assert!(!header.contains("cost"), "{header}");

    ok(tmp.path(), &["-o", "all", "featurize", "--plans", "data/plans.ndjson", "--channels", "count,card,cost,weight"]);
    let csv = fs::read_to_string(tmp.path().join("all/features.csv")).unwrap();
    assert!(csv.lines().next().unwrap().contains("cost"));
}

#[test]
fn constant_model_recommends_smallest_dop() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    corpus(dir);
    ok(dir, &["-o", "feat", "featurize", "--plans", "data/plans.ndjson"]);
    let registry = FeatureRegistry::from_json(&fs::read_to_string(dir.join("feat/registry.json")).unwrap()).unwrap();
    let dim = registry.dimension();
    let constant = Learned::Linear(LinearModel::from_raw(vec![0.0; dim], 7.0));
    let model = Model::from_parts(ModelSpec::new(ModelKind::ElasticNet), registry.fingerprint(), dim, constant);
    fs::write(dir.join("constant.json"), save_model(&model)).unwrap();

    ok(
        dir,
        &[
            "--dop-set",
            "4,8,16",
            "recommend",
            "--model",
            "constant.json",
            "--registry",
            "feat/registry.json",
            "--plans",
            "data/plans.ndjson",
        ],
    );
    let recs: Value = serde_json::from_str(&fs::read_to_string(dir.join("recommendations.json")).unwrap()).unwrap();
    let per_query = recs["per_query"].as_array().unwrap();
    assert_eq!(per_query.len(), 36);
    for r in per_query {
        assert_eq!(r["chosen_dop"], 4);
        assert_eq!(r["predicted_ms_at_choice"], 7.0);
    }
    assert_eq!(recs["workload"]["chosen_dop"], 4);
}

#[test]
fn train_predict_and_curves() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    corpus(dir);
    ok(dir, &["-o", "feat", "featurize", "--plans", "data/plans.ndjson"]);
    ok(
        dir,
        &[
            "-o",
            "m",
            "train",
            "--features",
            "feat/features.csv",
            "--latencies",
            "data/latencies.csv",
            "--registry",
            "feat/registry.json",
            "--kind",
            "gradient_boosting",
            "--param",
            "n_rounds=20",
        ],
    );
    ok(
        dir,
        &[
            "-o",
            "p",
            "predict",
            "--model",
            "m/model.json",
            "--registry",
            "feat/registry.json",
            "--plans",
            "data/plans.ndjson",
        ],
    );
    let predictions = fs::read_to_string(dir.join("p/predictions.csv")).unwrap();
    assert_eq!(predictions.lines().next(), Some("plan_id,dop,predicted_ms"));
    assert_eq!(predictions.lines().count(), 1 + 36 * 10);

    ok(dir, &["-o", "c", "curve", "--latencies", "data/latencies.csv"]);
    let curves = fs::read_to_string(dir.join("c/curves.csv")).unwrap();
    assert_eq!(curves.lines().next(), Some("target,dop,speedup,costup,source"));
    let baseline: Vec<&str> = curves.lines().filter(|l| l.split(',').nth(1) == Some("64")).collect();
    assert_eq!(baseline.len(), 36);
    assert!(baseline.iter().all(|l| l.ends_with(",1,1,actual")), "{:?}", &baseline[..2]);

    ok(
        dir,
        &[
            "-o",
            "pc",
            "curve",
            "--model",
            "m/model.json",
            "--registry",
            "feat/registry.json",
            "--plans",
            "data/plans.ndjson",
        ],
    );
    assert!(fs::read_to_string(dir.join("pc/curves.csv")).unwrap().contains(",predicted"));
}

#[test]
fn model_rejects_other_registry() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    corpus(dir);
    ok(dir, &["-o", "a", "featurize", "--plans", "data/plans.ndjson"]);
    ok(dir, &["-o", "b", "featurize", "--plans", "data/plans.ndjson", "--channels", "count"]);
    ok(
        dir,
        &[
            "-o",
            "m",
            "train",
            "--features",
            "a/features.csv",
            "--latencies",
            "data/latencies.csv",
            "--registry",
            "a/registry.json",
            "--kind",
            "elastic_net",
        ],
    );
    let out = doptune(
        dir,
        &["predict", "--model", "m/model.json", "--registry", "b/registry.json", "--plans", "data/plans.ndjson"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("models"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(doptune(tmp.path(), &[]).status.code(), Some(1));
    assert_eq!(doptune(tmp.path(), &["train"]).status.code(), Some(1));
    assert_eq!(doptune(tmp.path(), &["--help"]).status.code(), Some(0));
    let missing = doptune(tmp.path(), &["featurize", "--plans", "nope.json"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope.json"));
}

#[test]
fn evaluate_with_ablation_writes_one_dir_per_variant() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    corpus(dir);
    let config = r#"{
  "corpora": [{"id": "syn", "plans": "data/plans.ndjson", "latencies": "data/latencies.csv"}],
  "level": "G1",
  "folds": 3,
  "model": {"kind": "gradient_boosting", "hyperparams": {"n_rounds": 10}},
  "channels": ["count", "card", "cost", "weight"],
  "output_dir": "eval",
  "ablation": true
}"#;
    fs::write(dir.join("config.json"), config).unwrap();
    ok(dir, &["evaluate", "--config", "config.json"]);
    let mut variants: Vec<String> = fs::read_dir(dir.join("eval"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    variants.sort();
    assert_eq!(variants.len(), 5, "{variants:?}");
    for v in &variants {
        let report: Value =
            serde_json::from_str(&fs::read_to_string(dir.join("eval").join(v).join("report.json")).unwrap()).unwrap();
        assert_eq!(report["folds"].as_array().unwrap().len(), 3);
        assert!(dir.join("eval").join(v).join("folds.csv").exists());
    }
}
