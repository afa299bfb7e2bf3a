//! ST-deviation ischemia detection toolkit.
//!
//! End-to-end pieces for building an ischemia detector on ambulatory ECG:
//!
//! - [`wfdb`] — PhysioNet WFDB readers: `.hea` headers, format 212/16 signal
//!   files, MIT annotation streams, and ST-episode extraction.
//! - [`dsp`] — signal conditioning: rational resampling, dual-median baseline
//!   removal, zero-phase FIR lowpass, robust per-window normalization, and
//!   R-peak detection.
//! - [`dataset`] — labeled fixed-length windows, record-disjoint splits, class
//!   balancing, and a binary shard format for datasets on disk.
//! - [`nn`] — a from-scratch 1-D pre-activation residual CNN: forward,
//!   backward, Adam, plateau schedule, checkpoints, gradient verification.
//! - [`baselines`] — hand-crafted features plus logistic regression, random
//!   forest, and gradient boosting classifiers.
//! - [`eval`] — ROC-AUC (Mann-Whitney with ties), sensitivity/specificity,
//!   threshold selection, window-to-record aggregation.
//! - [`synth`] — synthetic ECG and on-disk WFDB fixtures for self-contained
//!   verification runs.

pub mod baselines;
pub mod config;
pub mod dataset;
pub mod dsp;
pub mod eval;
pub mod nn;
pub mod synth;
pub mod wfdb;

pub use config::{FilterSpec, PipelineConfig};
pub use dataset::{DatasetSplit, EcgWindow, Label};
pub use eval::EvalReport;
pub use nn::{ModelConfig, ModelParams};
pub use wfdb::{AnnotationEvent, EcgRecord, Protocol, RecordHeader, SignalSpec, StEpisode};
