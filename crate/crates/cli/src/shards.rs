//! Shard import with the artifact-error contract shared by train,
//! eval, and baselines.

use std::io::ErrorKind;
use std::path::PathBuf;

use stdetect_core::dataset::{import_shards, DatasetError, DatasetSplit};
use stdetect_core::PipelineConfig;

use crate::error::CliError;

pub fn dir(config: &PipelineConfig) -> PathBuf {
    config.output_dir.join("shards")
}

pub fn import(config: &PipelineConfig) -> Result<DatasetSplit, CliError> {
    let dir = dir(config);
    import_shards(&dir).map_err(|e| match e {
        DatasetError::Io(ref io) if io.kind() == ErrorKind::NotFound => CliError::Artifact(
            format!("no shards under {}; run `stdetect build` first", dir.display()),
        ),
        DatasetError::CorruptShard(msg) => {
            CliError::Artifact(format!("corrupt shard under {}: {msg}", dir.display()))
        }
        other => {
            CliError::Artifact(format!("cannot read shards under {}: {other}", dir.display()))
        }
    })
}
