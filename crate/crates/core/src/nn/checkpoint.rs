//! Model checkpoints.
//!
//! Layout: `ECGCKPT1` magic, a u64-LE manifest length, a JSON manifest
//! (model config plus an ordered tensor table), then each tensor's
//! values as little-endian f32 in table order. Loading rebuilds the
//! parameter structure from the config and refuses any disagreement
//! between config-derived shapes and the stored table.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{ModelConfig, ModelParams};
use super::NnError;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"ECGCKPT1";

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    len: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    config: ModelConfig,
    tensors: Vec<TensorEntry>,
}

pub fn checkpoint_bytes(params: &ModelParams<f32>) -> Vec<u8> {
    let named = params.named_tensors();
    let manifest = Manifest {
        config: params.config.clone(),
        tensors: named
            .iter()
            .map(|(name, data)| TensorEntry { name: name.clone(), len: data.len() })
            .collect(),
    };
    let manifest_json = serde_json::to_vec(&manifest).expect("manifest serializes");
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&(manifest_json.len() as u64).to_le_bytes());
    out.extend_from_slice(&manifest_json);
    for (_, data) in named {
        for &v in data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn params_from_bytes(bytes: &[u8]) -> Result<ModelParams<f32>, NnError> {
    let corrupt = |msg: &str| NnError::CorruptCheckpoint(msg.to_string());
    if bytes.len() < 16 {
        return Err(corrupt("shorter than the fixed header"));
    }
    if &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(corrupt("bad magic"));
    }
    let manifest_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let rest = &bytes[16..];
    if rest.len() < manifest_len {
        return Err(corrupt("truncated manifest"));
    }
    let manifest: Manifest = serde_json::from_slice(&rest[..manifest_len])
        .map_err(|e| corrupt(&format!("unreadable manifest: {e}")))?;
    manifest.config.validate()?;

    // Rebuild the parameter skeleton from the config; the seed is
    // irrelevant because every tensor is overwritten below.
    let mut params = ModelParams::<f32>::init(&manifest.config, 0)?;
    {
        let expected = params.named_tensors();
        if expected.len() != manifest.tensors.len() {
            return Err(NnError::VersionMismatch(format!(
                "manifest lists {} tensors, config implies {}",
                manifest.tensors.len(),
                expected.len()
            )));
        }
        for ((name, data), entry) in expected.iter().zip(&manifest.tensors) {
            if name != &entry.name || data.len() != entry.len {
                return Err(NnError::VersionMismatch(format!(
                    "tensor {} (len {}) does not match manifest entry {} (len {})",
                    name,
                    data.len(),
                    entry.name,
                    entry.len
                )));
            }
        }
    }

    let mut blob = &rest[manifest_len..];
    for (_, data) in params.named_tensors_mut() {
        let need = data.len() * 4;
        if blob.len() < need {
            return Err(corrupt("truncated tensor data"));
        }
        for (v, raw) in data.iter_mut().zip(blob[..need].chunks_exact(4)) {
            *v = f32::from_le_bytes(raw.try_into().unwrap());
        }
        blob = &blob[need..];
    }
    if !blob.is_empty() {
        return Err(corrupt("trailing bytes after tensor data"));
    }
    Ok(params)
}

pub fn save_checkpoint(params: &ModelParams<f32>, path: &Path) -> Result<(), NnError> {
    fs::write(path, checkpoint_bytes(params))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<ModelParams<f32>, NnError> {
    params_from_bytes(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::super::model::forward_train;
    use super::super::tensor::Tensor3;
    use super::*;

    fn small_config() -> ModelConfig {
        ModelConfig {
            n_residual_blocks: 2,
            convs_per_block: 2,
            kernel_len: 3,
            base_filters: 4,
            filter_increment_every: 1,
            subsample_every: 2,
            dropout_rate: 0.0,
            n_classes: 2,
        }
    }

    /// Params with non-default running statistics, so the round trip
    /// exercises every tensor kind.
    fn warmed_params() -> ModelParams<f32> {
        let mut params = ModelParams::<f32>::init(&small_config(), 42).unwrap();
        let x = Tensor3::from_vec(2, 1, 8, (0..16).map(|i| (i as f32 * 0.7).sin()).collect());
        let _ = forward_train(&mut params, &x, 1).unwrap();
        params
    }

    #[test]
    fn round_trip_is_bitwise_exact() {
        let params = warmed_params();
        let restored = params_from_bytes(&checkpoint_bytes(&params)).unwrap();
        assert_eq!(params, restored);
    }

    #[test]
    fn round_trip_through_a_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let params = warmed_params();
        save_checkpoint(&params, &path).unwrap();
        let restored = load_checkpoint(&path).unwrap();
        assert_eq!(params, restored);
        // Restored params predict identically.
        let x = Tensor3::from_vec(1, 1, 8, (0..8).map(|i| i as f32 * 0.1).collect());
        let a = super::super::model::forward_eval(&params, &x).unwrap();
        let b = super::super::model::forward_eval(&restored, &x).unwrap();
        assert_eq!(a.data, b.data);
    }

    #[test]
    fn bad_magic_is_rejected() {
        let mut bytes = checkpoint_bytes(&warmed_params());
        bytes[0] = b'X';
        let err = params_from_bytes(&bytes).unwrap_err();
        assert!(matches!(err, NnError::CorruptCheckpoint(ref m) if m.contains("bad magic")), "{err}");
    }

    #[test]
    fn truncation_is_rejected() {
        let bytes = checkpoint_bytes(&warmed_params());
        for cut in [4, 12, bytes.len() / 2, bytes.len() - 1] {
            assert!(
                matches!(params_from_bytes(&bytes[..cut]), Err(NnError::CorruptCheckpoint(_))),
                "cut {cut} accepted"
            );
        }
    }

    #[test]
    fn trailing_bytes_are_rejected() {
        let mut bytes = checkpoint_bytes(&warmed_params());
        bytes.extend_from_slice(&[0, 0, 0, 0]);
        assert!(matches!(params_from_bytes(&bytes), Err(NnError::CorruptCheckpoint(_))));
    }

    #[test]
    fn config_tensor_disagreement_is_a_version_mismatch() {
        // Rewrite the manifest to claim a deeper model than the stored
        // tensor table describes.
        let bytes = checkpoint_bytes(&warmed_params());
        let manifest_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let mut manifest: serde_json::Value =
            serde_json::from_slice(&bytes[16..16 + manifest_len]).unwrap();
        manifest["config"]["n_residual_blocks"] = serde_json::json!(3);
        let new_manifest = serde_json::to_vec(&manifest).unwrap();
        let mut doctored = Vec::new();
        doctored.extend_from_slice(&bytes[..8]);
        doctored.extend_from_slice(&(new_manifest.len() as u64).to_le_bytes());
        doctored.extend_from_slice(&new_manifest);
        doctored.extend_from_slice(&bytes[16 + manifest_len..]);
        let err = params_from_bytes(&doctored).unwrap_err();
        assert!(matches!(err, NnError::VersionMismatch(_)), "{err}");
    }
}
