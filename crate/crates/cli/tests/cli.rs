//! End-to-end tests of the `stdetect` binary: command surface, output
//! artifacts, and the exit-code contract.

mod common;

use std::fs;

use common::{bin, run_ok, stderr_of, stdout_of, test_config, write_config, write_dataset};
use tempfile::TempDir;

#[test]
fn inspect_summarizes_a_record_as_text_and_json() {
    let tmp = TempDir::new().unwrap();
    write_dataset(tmp.path(), 1);

    let out = run_ok(bin().arg("inspect").arg(tmp.path().join("rec00.hea")));
    let text = stdout_of(&out);
    assert!(text.contains("record rec00"), "{text}");
    assert!(text.contains("protocol B episodes: 1"), "{text}");
    assert!(text.contains("leads 2"), "{text}");

    // The .hea extension may be omitted; --json emits a parseable doc.
    let out = run_ok(bin().arg("inspect").arg("--json").arg(tmp.path().join("rec00")));
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(doc["record"], "rec00");
    assert_eq!(doc["leads"].as_array().unwrap().len(), 2);
    assert_eq!(doc["sampling_rate_hz"], 250.0);
    assert_eq!(doc["n_samples"], 15_360);
    assert!((doc["duration_secs"].as_f64().unwrap() - 61.44).abs() < 1e-9);
    assert_eq!(doc["episodes"]["B"], 1);
    assert_eq!(doc["episodes"]["A"], serde_json::Value::Null);
    assert_eq!(doc["checksum_warnings"], 0);
}

#[test]
fn inspect_exits_2_naming_the_offending_file() {
    let tmp = TempDir::new().unwrap();

    let missing = tmp.path().join("nope.hea");
    let out = bin().arg("inspect").arg(&missing).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("nope.hea"), "{}", stderr_of(&out));

    fs::write(tmp.path().join("bad.hea"), "not a wfdb header at all\n").unwrap();
    let out = bin().arg("inspect").arg(tmp.path().join("bad.hea")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("bad.hea"), "{}", stderr_of(&out));
}

#[test]
fn build_exits_3_when_no_records_exist() {
    let tmp = TempDir::new().unwrap();
    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let config_path = tmp.path().join("config.json");
    write_config(&config_path, &test_config(&empty, &tmp.path().join("out")));

    let out = bin().arg("build").arg("--config").arg(&config_path).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_of(&out).contains("no records found"), "{}", stderr_of(&out));
}

#[test]
fn build_exits_2_without_any_data_root() {
    let tmp = TempDir::new().unwrap();
    let config_path = tmp.path().join("config.json");
    let mut config = test_config(tmp.path(), &tmp.path().join("out"));
    config["data_root"] = serde_json::json!("");
    write_config(&config_path, &config);

    let out = bin().arg("build").arg("--config").arg(&config_path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("ECG_DATA_ROOT"), "{}", stderr_of(&out));
}

#[test]
fn data_root_falls_back_to_the_environment() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    fs::create_dir(&data).unwrap();
    write_dataset(&data, 6);
    let config_path = tmp.path().join("config.json");
    let mut config = test_config(&data, &tmp.path().join("out"));
    config["data_root"] = serde_json::json!("");
    write_config(&config_path, &config);

    run_ok(bin().arg("build").arg("--config").arg(&config_path).env("ECG_DATA_ROOT", &data));
    assert!(tmp.path().join("out/shards/train.ecgwin").is_file());
}

#[test]
fn bad_set_overrides_exit_2() {
    let out = bin().args(["build", "--set", "train.epochs"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("PATH.TO.FIELD=VALUE"), "{}", stderr_of(&out));

    let out = bin().args(["build", "--set", "seed.inner=1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Validation still runs on the merged result.
    let out = bin().args(["build", "--set", "window_len=100"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("window_len"), "{}", stderr_of(&out));
}

#[test]
fn train_exits_4_without_shards() {
    let tmp = TempDir::new().unwrap();
    let config_path = tmp.path().join("config.json");
    write_config(&config_path, &test_config(tmp.path(), &tmp.path().join("out")));

    let out = bin().arg("train").arg("--config").arg(&config_path).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr_of(&out).contains("stdetect build"), "{}", stderr_of(&out));
}

/// The full chain on one fixture set: build -> train -> eval ->
/// baselines, then the artifact-corruption exit codes on the same
/// output directory.
#[test]
fn pipeline_runs_end_to_end_with_the_documented_artifacts() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    let out_dir = tmp.path().join("out");
    fs::create_dir(&data).unwrap();
    write_dataset(&data, 6);
    let config_path = tmp.path().join("config.json");
    write_config(&config_path, &test_config(&data, &out_dir));

    // build: shards plus a manifest with per-split class counts.
    run_ok(bin().arg("build").arg("--config").arg(&config_path));
    for name in ["train.ecgwin", "validation.ecgwin", "test.ecgwin", "provenance.json"] {
        assert!(out_dir.join("shards").join(name).is_file(), "missing {name}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["records"], 6);
    let splits = &manifest["splits"];
    let records_covered: u64 = ["train", "validation", "test"]
        .iter()
        .map(|s| splits[s]["records"].as_u64().unwrap())
        .sum();
    assert_eq!(records_covered, 6);
    for split in ["train", "validation", "test"] {
        assert!(splits[split]["windows"].as_u64().unwrap() > 0, "{split} empty");
    }
    // balance_ratio 1.0 oversamples the train minority to parity.
    assert_eq!(splits["train"]["normal"], splits["train"]["ischemic"]);

    // train: checkpoint + history CSV, one row per epoch.
    run_ok(bin().arg("train").arg("--config").arg(&config_path));
    assert!(out_dir.join("checkpoint.ckpt").is_file());
    let history = fs::read_to_string(out_dir.join("history.csv")).unwrap();
    let lines: Vec<&str> = history.lines().collect();
    assert_eq!(lines[0], "epoch,train_loss,val_loss,val_auc,lr");
    assert_eq!(lines.len(), 3, "{history}");

    // eval on the validation split: report AUC must reproduce the
    // history row of the checkpointed epoch exactly.
    run_ok(bin().args(["eval", "--split", "val", "--config"]).arg(&config_path));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("eval_report.json")).unwrap())
            .unwrap();
    let auc = report["auc"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&auc));
    let last_val_auc: f64 = lines.last().unwrap().split(',').nth(3).unwrap().parse().unwrap();
    assert!(
        (auc - last_val_auc).abs() < 1e-9,
        "report auc {auc} vs trailing history row {last_val_auc}"
    );
    let roc = fs::read_to_string(out_dir.join("roc.csv")).unwrap();
    assert!(roc.starts_with("fpr,tpr\n"), "{roc}");

    // baselines: exactly the three documented models.
    run_ok(bin().args(["baselines", "--split", "val", "--config"]).arg(&config_path));
    let reports: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("baselines.json")).unwrap()).unwrap();
    let keys: Vec<&String> = reports.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["gbm", "logreg", "random_forest"]);
    for (_, value) in reports.as_object().unwrap() {
        assert!(value["auc"].as_f64().unwrap() >= 0.0);
    }

    // A config mismatch is exit 5.
    let out = bin()
        .args(["eval", "--set", "model.base_filters=16", "--config"])
        .arg(&config_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(5), "{}", stderr_of(&out));

    // A clobbered checkpoint is exit 4; a missing one too.
    fs::write(out_dir.join("checkpoint.ckpt"), b"not a checkpoint").unwrap();
    let out = bin().arg("eval").arg("--config").arg(&config_path).output().unwrap();
    assert_eq!(out.status.code(), Some(4), "{}", stderr_of(&out));
    fs::remove_file(out_dir.join("checkpoint.ckpt")).unwrap();
    let out = bin().arg("eval").arg("--config").arg(&config_path).output().unwrap();
    assert_eq!(out.status.code(), Some(4), "{}", stderr_of(&out));

    // A corrupted shard is exit 4 for every consumer.
    let shard = out_dir.join("shards/train.ecgwin");
    let mut bytes = fs::read(&shard).unwrap();
    bytes[0] ^= 0xFF;
    fs::write(&shard, &bytes).unwrap();
    let out = bin().arg("train").arg("--config").arg(&config_path).output().unwrap();
    assert_eq!(out.status.code(), Some(4), "{}", stderr_of(&out));
}

#[test]
fn verify_passes_and_the_fault_hook_fails() {
    let out = run_ok(bin().arg("verify"));
    let text = stdout_of(&out);
    assert_eq!(text.matches("PASS ").count(), 4, "{text}");
    assert!(text.contains("verify: 4/4 checks passed"), "{text}");

    let out = bin().args(["verify", "--inject-fault"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout_of(&out).contains("FAIL gradient-check"), "{}", stdout_of(&out));
}
