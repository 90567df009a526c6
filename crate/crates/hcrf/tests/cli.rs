//! End-to-end checks of the `hcrf` binary: the synth -> train -> predict
//! -> eval -> cv -> inspect pipeline, byte-identical reruns, config
//! overrides, and the error protocol.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn hcrf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hcrf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn full_pipeline_reaches_high_accuracy_and_is_reproducible() {
    let dir = tempdir().unwrap();
    let root = dir.path();
    let synth_dir = root.join("synth");
    let train_dir = root.join("train");
    let eval_dir = root.join("eval");
    let predict_dir = root.join("predict");

    // Small but nontrivial dataset so the whole pipeline stays fast.
    assert_ok(&hcrf(&[
        "synth",
        "--out-dir",
        synth_dir.to_str().unwrap(),
        "--sequences",
        "48",
        "--subjects",
        "3",
        "--seed",
        "7",
    ]));
    let data = synth_dir.join("dataset.jsonl");
    assert!(data.exists());
    assert!(synth_dir.join("config.json").exists());

    assert_ok(&hcrf(&[
        "train",
        "--data",
        data.to_str().unwrap(),
        "--out-dir",
        train_dir.to_str().unwrap(),
        "--threads",
        "2",
    ]));
    let model = train_dir.join("model.json");
    for name in [
        "model.json",
        "train_log.jsonl",
        "train_report.json",
        "config.json",
    ] {
        assert!(train_dir.join(name).exists(), "missing {name}");
    }

    // Training twice writes a byte-identical model.
    let first_model = read(&model);
    let train_dir2 = root.join("train2");
    assert_ok(&hcrf(&[
        "train",
        "--data",
        data.to_str().unwrap(),
        "--out-dir",
        train_dir2.to_str().unwrap(),
    ]));
    assert_eq!(first_model, read(&train_dir2.join("model.json")));

    assert_ok(&hcrf(&[
        "predict",
        "--data",
        data.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
        "--out-dir",
        predict_dir.to_str().unwrap(),
    ]));
    let predictions = read(&predict_dir.join("predictions.jsonl"));
    assert_eq!(predictions.lines().count(), 48);
    let first: serde_json::Value =
        serde_json::from_str(predictions.lines().next().unwrap()).unwrap();
    assert!(first["activity_name"].is_string());
    assert!(first["score"].is_number());

    let eval_out = hcrf(&[
        "eval",
        "--data",
        data.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
        "--out-dir",
        eval_dir.to_str().unwrap(),
    ]);
    assert_ok(&eval_out);
    for name in [
        "metrics.json",
        "metrics.txt",
        "confusion_actions.csv",
        "confusion_activities.csv",
        "config.json",
    ] {
        assert!(eval_dir.join(name).exists(), "missing {name}");
    }
    // Training-set accuracy on separable synthetic data is essentially
    // perfect; 0.95 leaves margin.
    let metrics: serde_json::Value =
        serde_json::from_str(&read(&eval_dir.join("metrics.json"))).unwrap();
    assert!(metrics["actions"]["accuracy"].as_f64().unwrap() >= 0.95);
    assert!(metrics["activities"]["accuracy"].as_f64().unwrap() >= 0.95);

    // Eval reruns are byte-identical.
    let metrics_first = read(&eval_dir.join("metrics.json"));
    assert_ok(&hcrf(&[
        "eval",
        "--data",
        data.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
        "--out-dir",
        eval_dir.to_str().unwrap(),
    ]));
    assert_eq!(metrics_first, read(&eval_dir.join("metrics.json")));

    let inspect = hcrf(&["inspect", "--model", model.to_str().unwrap()]);
    assert_ok(&inspect);
    let text = String::from_utf8_lossy(&inspect.stdout).to_string();
    assert!(text.contains("4 actions x 2 latent states"));
    assert!(text.contains("standardizer: fitted"));
}

#[test]
fn cross_validation_subcommand_writes_reports() {
    let dir = tempdir().unwrap();
    let root = dir.path();
    let synth_dir = root.join("synth");
    assert_ok(&hcrf(&[
        "synth",
        "--out-dir",
        synth_dir.to_str().unwrap(),
        "--sequences",
        "24",
        "--subjects",
        "3",
        "--min-len",
        "3",
        "--max-len",
        "5",
    ]));
    let cv_dir = root.join("cv");
    assert_ok(&hcrf(&[
        "cv",
        "--data",
        synth_dir.join("dataset.jsonl").to_str().unwrap(),
        "--out-dir",
        cv_dir.to_str().unwrap(),
        "--latent",
        "1",
        "--max-cp",
        "80",
    ]));
    let report: serde_json::Value =
        serde_json::from_str(&read(&cv_dir.join("cv_report.json"))).unwrap();
    assert_eq!(report["folds"].as_array().unwrap().len(), 3);
    assert!(cv_dir.join("cv_report.txt").exists());
    assert!(cv_dir.join("config.json").exists());
}

#[test]
fn lambda_zero_flag_trains_the_action_only_objective() {
    let dir = tempdir().unwrap();
    let root = dir.path();
    let synth_dir = root.join("synth");
    assert_ok(&hcrf(&[
        "synth",
        "--out-dir",
        synth_dir.to_str().unwrap(),
        "--sequences",
        "24",
        "--subjects",
        "2",
        "--min-len",
        "3",
        "--max-len",
        "5",
    ]));
    let out = root.join("train");
    assert_ok(&hcrf(&[
        "train",
        "--data",
        synth_dir.join("dataset.jsonl").to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
        "--lambda",
        "0",
        "--latent",
        "1",
    ]));
    let config: serde_json::Value = serde_json::from_str(&read(&out.join("config.json"))).unwrap();
    assert_eq!(config["hyperparams"]["lambda_loss"].as_f64().unwrap(), 0.0);
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempdir().unwrap();
    let root = dir.path();
    let synth_dir = root.join("synth");
    assert_ok(&hcrf(&[
        "synth",
        "--out-dir",
        synth_dir.to_str().unwrap(),
        "--sequences",
        "16",
        "--subjects",
        "2",
        "--min-len",
        "3",
        "--max-len",
        "4",
    ]));
    let override_path = root.join("overrides.json");
    std::fs::write(&override_path, r#"{"seed": 42, "latent": 1}"#).unwrap();
    let out = root.join("train");
    assert_ok(&hcrf(&[
        "train",
        "--data",
        synth_dir.join("dataset.jsonl").to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
        "--seed",
        "5",
        "--config",
        override_path.to_str().unwrap(),
    ]));
    let config: serde_json::Value = serde_json::from_str(&read(&out.join("config.json"))).unwrap();
    assert_eq!(config["hyperparams"]["rng_seed"].as_u64().unwrap(), 42);
    assert_eq!(config["hyperparams"]["n_latent"].as_u64().unwrap(), 1);
}

#[test]
fn errors_are_single_line_machine_parsable_and_nonzero() {
    // Missing required flag: clap usage error, nonzero exit.
    let out = hcrf(&["train"]);
    assert!(!out.status.success());

    // Nonexistent dataset: our error protocol.
    let dir = tempdir().unwrap();
    let out = hcrf(&[
        "train",
        "--data",
        "/nonexistent/data.jsonl",
        "--out-dir",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().next().unwrap();
    let payload = line.strip_prefix("error: ").expect("error prefix");
    let parsed: serde_json::Value = serde_json::from_str(payload).expect("JSON error payload");
    assert_eq!(parsed["kind"].as_str().unwrap(), "io");

    // Invalid hyperparameters: usage kind.
    let out = hcrf(&[
        "train",
        "--data",
        "/nonexistent/data.jsonl",
        "--out-dir",
        dir.path().join("out2").to_str().unwrap(),
        "--c-reg",
        "0",
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    let parsed: serde_json::Value = serde_json::from_str(
        stderr
            .lines()
            .next()
            .unwrap()
            .strip_prefix("error: ")
            .unwrap(),
    )
    .unwrap();
    assert_eq!(parsed["kind"].as_str().unwrap(), "usage");
}

#[test]
fn categorical_init_consumes_the_side_channel_file() {
    let dir = tempdir().unwrap();
    let root = dir.path();
    let synth_dir = root.join("synth");
    assert_ok(&hcrf(&[
        "synth",
        "--out-dir",
        synth_dir.to_str().unwrap(),
        "--sequences",
        "16",
        "--subjects",
        "2",
        "--min-len",
        "3",
        "--max-len",
        "4",
    ]));
    let data = synth_dir.join("dataset.jsonl");
    // Build a categories file reusing the gold actions as categories.
    let ds = hcrf::DatasetFile::load(&data).unwrap();
    let cats = hcrf::dataset::CategoryFile {
        header: hcrf::dataset::CategoriesHeader {
            format: hcrf::dataset::CATEGORIES_FORMAT.into(),
            version: hcrf::dataset::CATEGORIES_VERSION,
            n_categories: ds.header.space.n_actions,
        },
        records: ds
            .records
            .iter()
            .map(|r| hcrf::dataset::CategoryRecord {
                id: r.id.clone(),
                categories: r.actions.clone().unwrap(),
            })
            .collect(),
    };
    let cats_path = root.join("categories.jsonl");
    cats.save(&cats_path).unwrap();

    let out = root.join("train");
    assert_ok(&hcrf(&[
        "train",
        "--data",
        data.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
        "--init",
        "kmeans-categorical",
        "--categories",
        cats_path.to_str().unwrap(),
    ]));
    assert!(out.join("model.json").exists());

    // Requesting the categorical initializer without the file fails.
    let out2 = hcrf(&[
        "train",
        "--data",
        data.to_str().unwrap(),
        "--out-dir",
        root.join("train2").to_str().unwrap(),
        "--init",
        "kmeans-categorical",
    ]);
    assert!(!out2.status.success());
}
