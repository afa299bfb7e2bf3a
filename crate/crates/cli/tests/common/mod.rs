//! Fixtures shared by the CLI and acceptance suites: synthetic WFDB
//! datasets on disk plus helpers for driving the built binary.

use std::path::Path;
use std::process::{Command, Output};

use stdetect_core::synth::{write_records_index, write_synthetic_record};
use stdetect_core::Protocol;

/// A `stdetect` invocation isolated from the ambient environment.
pub fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_stdetect"));
    cmd.env_remove("ECG_DATA_ROOT");
    cmd
}

pub fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Runs the command and asserts exit 0, echoing both streams on
/// failure.
pub fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        stdout_of(&out),
        stderr_of(&out)
    );
    out
}

/// Writes `n_records` two-lead records of 15_360 samples at 250 Hz
/// (61.44 s). Each carries one protocol-B episode on lead 0 spanning
/// source samples 3_840..11_520 (30.72 s, -150 uV), which lands
/// exactly on windows 6..18 after resampling to 200 Hz with
/// window_len 512.
pub fn write_dataset(dir: &Path, n_records: usize) -> Vec<String> {
    let names: Vec<String> = (0..n_records).map(|r| format!("rec{r:02}")).collect();
    for (r, name) in names.iter().enumerate() {
        write_synthetic_record(
            dir,
            name,
            250.0,
            15_360,
            &[(3_840, 11_520)],
            Protocol::B,
            1000 + r as u64,
        )
        .expect("fixture record writes");
    }
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    write_records_index(dir, &refs).expect("index writes");
    names
}

/// A config small enough to train in seconds but structurally real:
/// two residual blocks on 512-sample windows.
pub fn test_config(data_root: &Path, out_dir: &Path) -> serde_json::Value {
    serde_json::json!({
        "data_root": data_root,
        "output_dir": out_dir,
        "window_len": 512,
        "model": {
            "n_residual_blocks": 2,
            "convs_per_block": 2,
            "kernel_len": 8,
            "base_filters": 8,
            "filter_increment_every": 2,
            "subsample_every": 1,
            "dropout_rate": 0.1,
            "n_classes": 2
        },
        "train": {
            "epochs": 2,
            "batch_size": 16,
            "learning_rate": 0.01
        },
        "seed": 11
    })
}

pub fn write_config(path: &Path, value: &serde_json::Value) {
    std::fs::write(path, serde_json::to_string_pretty(value).expect("config serializes"))
        .expect("config writes");
}
