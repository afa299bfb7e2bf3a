//! `stdetect eval` — score a checkpoint on one split, write the
//! report and ROC curve.

use std::fs;
use std::io::ErrorKind;
use std::path::Path;

use stdetect_core::dataset::SplitName;
use stdetect_core::nn::{load_checkpoint, score_windows, NnError};
use stdetect_core::{EvalReport, Label, PipelineConfig};

use crate::error::CliError;

pub fn split_label(name: SplitName) -> &'static str {
    match name {
        SplitName::Train => "train",
        SplitName::Validation => "validation",
        SplitName::Test => "test",
    }
}

pub fn run(
    config: &PipelineConfig,
    checkpoint: Option<&Path>,
    split_name: SplitName,
) -> Result<(), CliError> {
    let split = crate::shards::import(config)?;
    let default_path = config.output_dir.join("checkpoint.ckpt");
    let path = checkpoint.unwrap_or(&default_path);
    let params = load_checkpoint(path).map_err(|e| match e {
        NnError::VersionMismatch(_) => CliError::Mismatch(format!("{}: {e}", path.display())),
        NnError::CorruptCheckpoint(_) => CliError::Artifact(format!("{}: {e}", path.display())),
        NnError::Io(ref io) if io.kind() == ErrorKind::NotFound => CliError::Artifact(format!(
            "no checkpoint at {}; run `stdetect train` first",
            path.display()
        )),
        other => CliError::Other(other.to_string()),
    })?;
    if params.config != config.model {
        return Err(CliError::Mismatch(format!(
            "checkpoint {} was trained with a different model config than the active one",
            path.display()
        )));
    }

    let windows = split.windows(split_name);
    if windows.is_empty() {
        return Err(CliError::Data(format!("the {} split is empty", split_label(split_name))));
    }
    // Same batch size as the training-loop validation pass, so the
    // reported AUC reproduces the history row exactly.
    let scores = score_windows(&params, windows, config.train.batch_size)
        .map_err(|e| CliError::Other(e.to_string()))?;
    let labels: Vec<bool> = windows.iter().map(|w| w.label == Label::Ischemic).collect();
    let report =
        EvalReport::from_scores(&scores, &labels).map_err(|e| CliError::Data(e.to_string()))?;

    fs::create_dir_all(&config.output_dir).map_err(|e| {
        CliError::Other(format!("cannot create {}: {e}", config.output_dir.display()))
    })?;
    let report_path = config.output_dir.join("eval_report.json");
    fs::write(&report_path, report.to_json_pretty())
        .map_err(|e| CliError::Other(format!("cannot write {}: {e}", report_path.display())))?;
    let roc_path = config.output_dir.join("roc.csv");
    fs::write(&roc_path, report.roc_csv())
        .map_err(|e| CliError::Other(format!("cannot write {}: {e}", roc_path.display())))?;

    println!(
        "{} auc {:.6} sensitivity {:.6} specificity {:.6} (threshold {})",
        split_label(split_name),
        report.auc,
        report.sensitivity,
        report.specificity,
        report.threshold
    );
    println!("report: {}", report_path.display());
    println!("roc: {}", roc_path.display());
    Ok(())
}
