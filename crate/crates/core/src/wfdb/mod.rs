//! WFDB/PhysioNet file readers.
//!
//! Covers the subset of the WFDB conventions needed for long-term ST
//! analysis: text headers (`.hea`), signal files in formats 212 and 16
//! (`.dat`), MIT-format binary annotation streams, and extraction of
//! ST-deviation episodes from annotation aux text.

mod annotation;
mod episode;
mod header;
mod record;
mod signal;

pub use annotation::{read_annotations, write_annotations};
pub use episode::{extract_st_episodes, parse_st_aux, EpisodeIssue, StAuxMarker};
pub use header::parse_header;
pub use record::{discover_records, read_record, read_record_annotations, RecordPaths};
pub use signal::{adc_to_physical, decode_212, encode_212, read_signal, ChecksumMismatch};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum WfdbError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported storage format {0} (only 212 and 16 are supported)")]
    UnsupportedFormat(u16),
    #[error("truncated signal data: need {needed} bytes, have {have}")]
    TruncatedData { needed: usize, have: usize },
    #[error("truncated annotation stream at byte {0}")]
    TruncatedStream(usize),
    #[error("aux bytes with no owning annotation at byte {0}")]
    DanglingAux(usize),
    #[error("record file missing: {0}")]
    MissingFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Signal storage formats understood by this crate.
///
/// The long-term ST records all use format 212; format 16 is kept for
/// locally converted data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum StorageFormat {
    Format212,
    Format16,
}

impl StorageFormat {
    pub fn from_code(code: u16) -> Result<Self, WfdbError> {
        match code {
            212 => Ok(Self::Format212),
            16 => Ok(Self::Format16),
            other => Err(WfdbError::UnsupportedFormat(other)),
        }
    }

    pub fn code(self) -> u16 {
        match self {
            Self::Format212 => 212,
            Self::Format16 => 16,
        }
    }
}

/// One signal specification line of a header file.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub file_name: String,
    pub storage_format: StorageFormat,
    /// ADC units per millivolt. Defaults to 200 when the header omits it.
    pub gain: f64,
    /// ADC value corresponding to 0 mV.
    pub adc_baseline: i32,
    pub units_label: String,
    pub initial_value: i32,
    /// 16-bit signed sum of all samples, as stored in the header.
    pub checksum: i16,
    /// Lead name, e.g. "ML2".
    pub description: String,
}

/// Parsed record header (`.hea`).
#[derive(Debug, Clone, PartialEq)]
pub struct RecordHeader {
    pub record_name: String,
    pub n_signals: usize,
    pub sampling_rate: f64,
    /// Samples per signal. Zero when the header leaves it unspecified.
    pub n_samples: u64,
    pub signals: Vec<SignalSpec>,
}

impl RecordHeader {
    pub fn duration_secs(&self) -> f64 {
        self.n_samples as f64 / self.sampling_rate
    }
}

/// A record's signals converted to physical units.
#[derive(Debug, Clone)]
pub struct EcgRecord {
    pub header: RecordHeader,
    /// One `Vec<f64>` of millivolt values per lead, each `n_samples` long.
    pub signals: Vec<Vec<f64>>,
}

impl EcgRecord {
    pub fn lead_name(&self, lead: usize) -> &str {
        &self.header.signals[lead].description
    }
}

/// One event from a MIT-format annotation stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationEvent {
    pub sample_index: u64,
    /// Annotation code, 1..=49 for content events.
    pub code: u8,
    pub subtype: i8,
    pub channel: u8,
    pub num_field: i8,
    pub aux: Option<String>,
}

/// ST annotation protocol variant.
///
/// Protocol B requires a deviation of at least 100 uV sustained for at
/// least 30 s.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Protocol {
    A,
    B,
    C,
}

impl Protocol {
    /// Annotator suffix of the episode stream for this protocol
    /// (`.sta` / `.stb` / `.stc` in the long-term ST database layout).
    pub fn annotation_suffix(self) -> &'static str {
        match self {
            Protocol::A => "sta",
            Protocol::B => "stb",
            Protocol::C => "stc",
        }
    }

    /// Minimum absolute ST deviation in uV for an episode to count.
    pub fn v_min_uv(self) -> f64 {
        match self {
            Protocol::A => 75.0,
            Protocol::B => 100.0,
            Protocol::C => 100.0,
        }
    }

    /// Minimum episode duration in seconds.
    pub fn t_min_secs(self) -> f64 {
        match self {
            Protocol::A => 30.0,
            Protocol::B => 30.0,
            Protocol::C => 60.0,
        }
    }
}

impl std::str::FromStr for Protocol {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" | "a" => Ok(Protocol::A),
            "B" | "b" => Ok(Protocol::B),
            "C" | "c" => Ok(Protocol::C),
            other => Err(format!("unknown protocol {other:?} (expected A, B, or C)")),
        }
    }
}

/// One annotated ST-deviation episode.
#[derive(Debug, Clone, PartialEq)]
pub struct StEpisode {
    pub lead: usize,
    pub start_sample: u64,
    pub extremum_sample: u64,
    pub end_sample: u64,
    /// Signed deviation at the extremum, in uV.
    pub deviation_uv: f64,
    pub protocol: Protocol,
}

impl StEpisode {
    pub fn duration_secs(&self, sampling_rate: f64) -> f64 {
        (self.end_sample - self.start_sample) as f64 / sampling_rate
    }
}
