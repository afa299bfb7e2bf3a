//! Labeled windows, splits, and the on-disk shard format.

mod shard;
mod split;
mod window;

pub use shard::{export_shards, import_shards, SHARD_MAGIC};
pub use split::{balance_classes, split_by_record};
pub use window::{label_window, rescale_episode, window_record, LabelOutcome, RawWindow};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("signal of {len} samples is shorter than one {window} sample window")]
    SignalShorterThanWindow { len: usize, window: usize },
    #[error("{have} records cannot cover a {need}-way split")]
    TooFewRecords { have: usize, need: usize },
    #[error("cannot balance a single-class window set")]
    SingleClassInput,
    #[error("corrupt shard: {0}")]
    CorruptShard(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Window class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Normal,
    Ischemic,
}

impl Label {
    pub fn code(self) -> u8 {
        match self {
            Label::Normal => 0,
            Label::Ischemic => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Label::Normal),
            1 => Some(Label::Ischemic),
            _ => None,
        }
    }

    /// Index of the class in model output order (normal, ischemic).
    pub fn class_index(self) -> usize {
        self.code() as usize
    }
}

/// One normalized, labeled model input.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgWindow {
    pub record_id: String,
    pub lead: u8,
    /// Offset of the window in the preprocessed 200 Hz lead.
    pub start_sample: u64,
    /// Normalized samples, `window_len` long, all in [-20, 20].
    pub samples: Vec<f32>,
    pub label: Label,
}

/// Which split a record landed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Validation,
    Test,
}

/// Patient-disjoint train/validation/test partition.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<EcgWindow>,
    pub validation: Vec<EcgWindow>,
    pub test: Vec<EcgWindow>,
    /// Record-to-split assignment, covering every record seen.
    pub provenance: BTreeMap<String, SplitName>,
}

impl DatasetSplit {
    pub fn windows(&self, name: SplitName) -> &[EcgWindow] {
        match name {
            SplitName::Train => &self.train,
            SplitName::Validation => &self.validation,
            SplitName::Test => &self.test,
        }
    }

    /// (normal, ischemic) counts per split.
    pub fn class_counts(&self, name: SplitName) -> (usize, usize) {
        let windows = self.windows(name);
        let ischemic = windows.iter().filter(|w| w.label == Label::Ischemic).count();
        (windows.len() - ischemic, ischemic)
    }

    /// No record contributes windows to two splits, and every window's
    /// record is in the provenance map.
    pub fn is_patient_disjoint(&self) -> bool {
        for name in [SplitName::Train, SplitName::Validation, SplitName::Test] {
            for w in self.windows(name) {
                if self.provenance.get(&w.record_id) != Some(&name) {
                    return false;
                }
            }
        }
        true
    }
}
