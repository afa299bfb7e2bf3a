//! Pipeline configuration.
//!
//! Everything an experiment depends on lives in one serializable
//! struct so that runs are diffable: two artifacts produced from the
//! same JSON (plus seed and inputs) are identical.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::{ModelConfig, TrainConfig};
use crate::wfdb::Protocol;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("unknown config path {0:?}")]
    UnknownPath(String),
    #[error("config is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Filter stage families used by the preprocessing chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    LowpassFir,
    MedianBaseline,
}

/// Parameters of one filter stage.
///
/// `cutoff_hz`/`taps` apply to the FIR kind, `window_ms` to the median
/// kind; the unused fields are carried along so one config schema
/// covers both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterSpec {
    pub kind: FilterKind,
    pub cutoff_hz: f64,
    pub taps: usize,
    /// (short, long) median window lengths in milliseconds.
    pub window_ms: (f64, f64),
}

impl Default for FilterSpec {
    fn default() -> Self {
        Self::lowpass(40.0, 101)
    }
}

impl FilterSpec {
    pub fn lowpass(cutoff_hz: f64, taps: usize) -> Self {
        Self { kind: FilterKind::LowpassFir, cutoff_hz, taps, window_ms: (200.0, 600.0) }
    }

    pub fn median_baseline(short_ms: f64, long_ms: f64) -> Self {
        Self { kind: FilterKind::MedianBaseline, cutoff_hz: 40.0, taps: 101, window_ms: (short_ms, long_ms) }
    }

    /// Checks the spec against the rate it will run at.
    pub fn validate(&self, rate_hz: f64) -> Result<(), ConfigError> {
        match self.kind {
            FilterKind::LowpassFir => {
                if self.taps < 3 || self.taps % 2 == 0 {
                    return Err(ConfigError::Invalid(format!(
                        "FIR taps must be odd and >= 3, got {}",
                        self.taps
                    )));
                }
                if !(self.cutoff_hz > 0.0 && self.cutoff_hz < rate_hz / 2.0) {
                    return Err(ConfigError::Invalid(format!(
                        "cutoff {} Hz outside (0, {}) at rate {} Hz",
                        self.cutoff_hz,
                        rate_hz / 2.0,
                        rate_hz
                    )));
                }
            }
            FilterKind::MedianBaseline => {
                let (short, long) = self.window_ms;
                if !(short > 0.0 && long > 0.0 && short <= long) {
                    return Err(ConfigError::Invalid(format!(
                        "median windows must satisfy 0 < short <= long, got ({short}, {long}) ms"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Record-level split proportions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self { train: 0.8, validation: 0.1, test: 0.1 }
    }
}

impl SplitFractions {
    pub fn as_tuple(self) -> (f64, f64, f64) {
        (self.train, self.validation, self.test)
    }

    pub fn validate(self) -> Result<(), ConfigError> {
        let sum = self.train + self.validation + self.test;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(ConfigError::Invalid(format!(
                "split fractions must sum to 1, got {sum}"
            )));
        }
        if self.train < 0.0 || self.validation < 0.0 || self.test < 0.0 {
            return Err(ConfigError::Invalid("split fractions must be non-negative".into()));
        }
        Ok(())
    }
}

/// The one config object every command consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Directory holding the WFDB records. Empty means "use the
    /// ECG_DATA_ROOT environment variable".
    pub data_root: PathBuf,
    pub output_dir: PathBuf,
    pub protocol: Protocol,
    /// Native rate of the source records.
    pub source_rate_hz: f64,
    pub resample_to_hz: f64,
    pub window_len: usize,
    /// Window step for the train split; `null` means `window_len`
    /// (non-overlapping).
    pub train_stride: Option<usize>,
    /// Window step for validation/test; `null` means `window_len / 2`.
    pub eval_stride: Option<usize>,
    /// Minimum episode-overlap fraction for the ischemic label.
    pub ischemic_overlap_min: f64,
    /// Normalization clamp, in IQR units.
    pub normalize_clamp: f64,
    pub baseline_filter: FilterSpec,
    pub lowpass_filter: FilterSpec,
    pub split: SplitFractions,
    /// Target minority:majority ratio for oversampling, 1.0 = balanced.
    pub balance_ratio: f64,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            data_root: PathBuf::new(),
            output_dir: PathBuf::from("out"),
            protocol: Protocol::B,
            source_rate_hz: 250.0,
            resample_to_hz: 200.0,
            window_len: 6144,
            train_stride: None,
            eval_stride: None,
            ischemic_overlap_min: 0.5,
            normalize_clamp: 20.0,
            baseline_filter: FilterSpec::median_baseline(200.0, 600.0),
            lowpass_filter: FilterSpec::default(),
            split: SplitFractions::default(),
            balance_ratio: 1.0,
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            seed: 7,
        }
    }
}

impl PipelineConfig {
    pub fn effective_train_stride(&self) -> usize {
        self.train_stride.unwrap_or(self.window_len)
    }

    pub fn effective_eval_stride(&self) -> usize {
        self.eval_stride.unwrap_or_else(|| (self.window_len / 2).max(1))
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Numeric cross-field validation. Path existence is checked by
    /// the commands that actually touch the paths.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.source_rate_hz > 0.0 && self.resample_to_hz > 0.0) {
            return Err(ConfigError::Invalid("sampling rates must be positive".into()));
        }
        let subsample = self.model.total_subsample();
        if self.window_len == 0 || self.window_len % subsample != 0 {
            return Err(ConfigError::Invalid(format!(
                "window_len {} must be a positive multiple of the model's total subsample factor {}",
                self.window_len, subsample
            )));
        }
        if self.effective_train_stride() == 0 || self.effective_eval_stride() == 0 {
            return Err(ConfigError::Invalid("strides must be >= 1".into()));
        }
        if !(self.ischemic_overlap_min > 0.0 && self.ischemic_overlap_min <= 1.0) {
            return Err(ConfigError::Invalid(format!(
                "ischemic_overlap_min must lie in (0, 1], got {}",
                self.ischemic_overlap_min
            )));
        }
        if !(self.normalize_clamp > 0.0) {
            return Err(ConfigError::Invalid("normalize_clamp must be positive".into()));
        }
        if self.baseline_filter.kind != FilterKind::MedianBaseline {
            return Err(ConfigError::Invalid("baseline_filter must be the median kind".into()));
        }
        if self.lowpass_filter.kind != FilterKind::LowpassFir {
            return Err(ConfigError::Invalid("lowpass_filter must be the FIR kind".into()));
        }
        self.baseline_filter.validate(self.resample_to_hz)?;
        self.lowpass_filter.validate(self.resample_to_hz)?;
        self.split.validate()?;
        if !(self.balance_ratio > 0.0 && self.balance_ratio <= 1.0) {
            return Err(ConfigError::Invalid(format!(
                "balance_ratio must lie in (0, 1], got {}",
                self.balance_ratio
            )));
        }
        self.model
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.train
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }
}

/// Applies one `--set path.to.field=value` override to a JSON config.
///
/// The raw value is parsed as JSON when possible ("32", "0.5", "true",
/// `[1,2]`) and treated as a bare string otherwise ("B", "out/run1").
pub fn apply_override(
    root: &mut serde_json::Value,
    path: &str,
    raw: &str,
) -> Result<(), ConfigError> {
    let mut node = &mut *root;
    let segments: Vec<&str> = path.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(ConfigError::UnknownPath(path.to_string()));
    }
    for (i, segment) in segments.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| ConfigError::UnknownPath(path.to_string()))?;
        if i + 1 == segments.len() {
            let value = serde_json::from_str(raw)
                .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
            obj.insert((*segment).to_string(), value);
            return Ok(());
        }
        node = obj
            .entry((*segment).to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
    }
    unreachable!("loop returns on the last segment")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let config = PipelineConfig::default();
        config.validate().unwrap();
        let text = config.to_json_pretty();
        assert_eq!(PipelineConfig::from_json(&text).unwrap(), config);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let config = PipelineConfig::from_json(r#"{"seed": 99, "protocol": "A"}"#).unwrap();
        assert_eq!(config.seed, 99);
        assert_eq!(config.protocol, Protocol::A);
        assert_eq!(config.window_len, 6144);
        assert_eq!(config.effective_train_stride(), 6144);
        assert_eq!(config.effective_eval_stride(), 3072);
    }

    #[test]
    fn set_overrides_nested_paths() {
        let mut value = serde_json::to_value(PipelineConfig::default()).unwrap();
        apply_override(&mut value, "model.base_filters", "32").unwrap();
        apply_override(&mut value, "train.epochs", "3").unwrap();
        apply_override(&mut value, "protocol", "C").unwrap();
        apply_override(&mut value, "output_dir", "runs/x").unwrap();
        let config: PipelineConfig = serde_json::from_value(value).unwrap();
        assert_eq!(config.model.base_filters, 32);
        assert_eq!(config.train.epochs, 3);
        assert_eq!(config.protocol, Protocol::C);
        assert_eq!(config.output_dir, PathBuf::from("runs/x"));
    }

    #[test]
    fn override_through_scalar_fails() {
        let mut value = serde_json::to_value(PipelineConfig::default()).unwrap();
        let err = apply_override(&mut value, "seed.inner", "1").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownPath(_)));
    }

    #[test]
    fn rejects_window_not_multiple_of_subsample() {
        let mut config = PipelineConfig::default();
        config.window_len = 6000;
        assert!(config.validate().is_err());
    }

    #[test]
    fn rejects_bad_fractions_and_even_taps() {
        let mut config = PipelineConfig::default();
        config.split.train = 0.9; // sums to 1.1
        assert!(config.validate().is_err());

        let mut config = PipelineConfig::default();
        config.lowpass_filter.taps = 100;
        assert!(config.validate().is_err());

        let mut config = PipelineConfig::default();
        config.lowpass_filter.cutoff_hz = 120.0; // above Nyquist at 200 Hz
        assert!(config.validate().is_err());
    }
}
