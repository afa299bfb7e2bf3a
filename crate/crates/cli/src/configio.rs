//! Config loading: file or defaults, `--set` overrides on top, then
//! the `ECG_DATA_ROOT` fallback, then validation.

use std::fs;
use std::path::PathBuf;

use stdetect_core::config::apply_override;
use stdetect_core::PipelineConfig;

use crate::error::CliError;
use crate::RunArgs;

pub fn load(args: &RunArgs) -> Result<PipelineConfig, CliError> {
    let mut value = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            serde_json::from_str(&text).map_err(|e| {
                CliError::Usage(format!("config {} is not valid JSON: {e}", path.display()))
            })?
        }
        None => serde_json::to_value(PipelineConfig::default()).expect("default config serializes"),
    };
    for entry in &args.overrides {
        let (path, raw) = entry.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("--set expects PATH.TO.FIELD=VALUE, got {entry:?}"))
        })?;
        apply_override(&mut value, path, raw).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let mut config: PipelineConfig = serde_json::from_value(value)
        .map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
    if config.data_root.as_os_str().is_empty() {
        if let Some(root) = std::env::var_os("ECG_DATA_ROOT") {
            config.data_root = PathBuf::from(root);
        }
    }
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(config)
}
