//! `stdetect train` — fit the CNN on previously built shards.

use std::fs;

use stdetect_core::nn::{history_csv, save_checkpoint, train_model, NnError};
use stdetect_core::PipelineConfig;

use crate::error::CliError;

fn train_err(e: NnError) -> CliError {
    match e {
        NnError::EmptySplit(_) => CliError::Data(e.to_string()),
        NnError::InvalidConfig(_) => CliError::Usage(e.to_string()),
        other => CliError::Other(other.to_string()),
    }
}

pub fn run(config: &PipelineConfig) -> Result<(), CliError> {
    let split = crate::shards::import(config)?;
    eprintln!(
        "training on {} windows, validating on {}",
        split.train.len(),
        split.validation.len()
    );
    let outcome = train_model(
        &config.model,
        &config.train,
        &split.train,
        &split.validation,
        config.seed,
    )
    .map_err(train_err)?;

    fs::create_dir_all(&config.output_dir).map_err(|e| {
        CliError::Other(format!("cannot create {}: {e}", config.output_dir.display()))
    })?;
    let checkpoint = config.output_dir.join("checkpoint.ckpt");
    save_checkpoint(&outcome.params, &checkpoint)
        .map_err(|e| CliError::Other(format!("cannot write {}: {e}", checkpoint.display())))?;
    let history = config.output_dir.join("history.csv");
    fs::write(&history, history_csv(&outcome.history))
        .map_err(|e| CliError::Other(format!("cannot write {}: {e}", history.display())))?;

    if let Some(last) = outcome.history.last() {
        println!(
            "trained {} epoch(s); final train_loss {:.6}, val_loss {:.6}, val_auc {:.6}",
            outcome.history.len(),
            last.train_loss,
            last.val_loss,
            last.val_auc
        );
    }
    println!("checkpoint: {}", checkpoint.display());
    println!("history: {}", history.display());
    Ok(())
}
