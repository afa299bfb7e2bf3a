//! `stdetect build` — records in, labeled/split/balanced shards out.
//!
//! Per-record order of operations: read, drop episodes failing the
//! protocol thresholds at the source rate, rescale the survivors to
//! the target rate, then per lead resample -> baseline removal ->
//! lowpass. Records are preprocessed in parallel but collected in
//! discovery order, so shard bytes depend only on config and seed.

use std::collections::BTreeMap;
use std::fs;

use rayon::prelude::*;
use serde_json::json;
use stdetect_core::dataset::{
    balance_classes, export_shards, label_window, rescale_episode, split_by_record, window_record,
    DatasetError, DatasetSplit, LabelOutcome, SplitName,
};
use stdetect_core::dsp::{lowpass, remove_baseline, resample, robust_normalize};
use stdetect_core::wfdb::{
    discover_records, extract_st_episodes, read_record, read_record_annotations, RecordPaths,
};
use stdetect_core::{EcgWindow, Label, PipelineConfig, StEpisode};

use crate::error::CliError;

/// One record after preprocessing, ready to window at any stride.
struct Prepped {
    name: String,
    /// Per-lead signals at the target rate.
    leads: Vec<Vec<f64>>,
    /// Protocol-satisfying episodes, rescaled to the target rate.
    episodes: Vec<StEpisode>,
    checksum_warnings: usize,
    annotation_issues: usize,
}

fn prep_record(paths: &RecordPaths, config: &PipelineConfig) -> Result<Prepped, CliError> {
    let data_err = |e: &dyn std::fmt::Display| {
        CliError::Data(format!("{}: {e}", paths.header.display()))
    };
    let (record, checksum_warnings) = read_record(paths).map_err(|e| data_err(&e))?;
    let source_rate = record.header.sampling_rate;
    if (source_rate - config.source_rate_hz).abs() > 1e-9 {
        eprintln!(
            "warning: {}: header rate {} Hz differs from configured source_rate_hz {}; using the header",
            paths.header.display(),
            source_rate,
            config.source_rate_hz
        );
    }
    let events = read_record_annotations(paths, config.protocol).map_err(|e| data_err(&e))?;
    let (episodes, issues) = extract_st_episodes(&events, config.protocol);
    let episodes: Vec<StEpisode> = episodes
        .into_iter()
        .filter(|e| e.satisfies_protocol(source_rate))
        .map(|e| rescale_episode(&e, source_rate, config.resample_to_hz))
        .collect();

    let mut leads = Vec::with_capacity(record.signals.len());
    for signal in &record.signals {
        let resampled =
            resample(signal, source_rate, config.resample_to_hz).map_err(|e| data_err(&e))?;
        let level = remove_baseline(&resampled, config.resample_to_hz, &config.baseline_filter)
            .map_err(|e| data_err(&e))?;
        let smooth =
            lowpass(&level, config.resample_to_hz, &config.lowpass_filter).map_err(|e| data_err(&e))?;
        leads.push(smooth);
    }
    eprintln!(
        "prepared {}: {} lead(s), {} qualifying episode(s)",
        record.header.record_name,
        leads.len(),
        episodes.len()
    );
    Ok(Prepped {
        name: record.header.record_name.clone(),
        leads,
        episodes,
        checksum_warnings: checksum_warnings.len(),
        annotation_issues: issues.len(),
    })
}

/// Windows every lead of one record at the given stride; boundary
/// windows with partial episode overlap are dropped and counted.
fn windowize(
    record: &Prepped,
    config: &PipelineConfig,
    stride: usize,
) -> Result<(Vec<EcgWindow>, usize), CliError> {
    let mut windows = Vec::new();
    let mut excluded = 0usize;
    for (lead_idx, lead) in record.leads.iter().enumerate() {
        let lead_episodes: Vec<StEpisode> = record
            .episodes
            .iter()
            .filter(|e| e.lead == lead_idx)
            .cloned()
            .collect();
        let raws = match window_record(lead, config.window_len, stride) {
            Ok(raws) => raws,
            Err(DatasetError::SignalShorterThanWindow { len, window }) => {
                eprintln!(
                    "warning: {} lead {lead_idx}: {len} samples < window {window}; skipping",
                    record.name
                );
                continue;
            }
            Err(e) => return Err(CliError::Data(format!("{}: {e}", record.name))),
        };
        for raw in raws {
            let label = match label_window(
                raw.start_sample,
                config.window_len,
                &lead_episodes,
                config.ischemic_overlap_min,
            ) {
                LabelOutcome::Normal => Label::Normal,
                LabelOutcome::Ischemic => Label::Ischemic,
                LabelOutcome::Excluded => {
                    excluded += 1;
                    continue;
                }
            };
            let normalized = robust_normalize(&raw.samples, config.normalize_clamp)
                .map_err(|e| CliError::Data(format!("{}: {e}", record.name)))?;
            windows.push(EcgWindow {
                record_id: record.name.clone(),
                lead: lead_idx as u8,
                start_sample: raw.start_sample,
                samples: normalized.iter().map(|&v| v as f32).collect(),
                label,
            });
        }
    }
    Ok((windows, excluded))
}

fn split_summary(split: &DatasetSplit, name: SplitName) -> serde_json::Value {
    let records = split.provenance.values().filter(|&&s| s == name).count();
    let (normal, ischemic) = split.class_counts(name);
    json!({
        "records": records,
        "windows": split.windows(name).len(),
        "normal": normal,
        "ischemic": ischemic,
    })
}

pub fn run(config: &PipelineConfig, jobs: Option<usize>) -> Result<(), CliError> {
    if config.data_root.as_os_str().is_empty() {
        return Err(CliError::Usage(
            "no data root: set data_root in the config or export ECG_DATA_ROOT".into(),
        ));
    }
    let records = discover_records(&config.data_root)
        .map_err(|e| CliError::Data(format!("cannot scan {}: {e}", config.data_root.display())))?;
    if records.is_empty() {
        return Err(CliError::Data(format!(
            "no records found under {}",
            config.data_root.display()
        )));
    }
    eprintln!(
        "building from {} record(s) under {}",
        records.len(),
        config.data_root.display()
    );

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Other(format!("cannot build thread pool: {e}")))?;
    let prepped: Vec<Prepped> = pool.install(|| {
        records.par_iter().map(|paths| prep_record(paths, config)).collect::<Result<_, _>>()
    })?;

    let train_stride = config.effective_train_stride();
    let eval_stride = config.effective_eval_stride();
    let mut excluded_at_train: BTreeMap<String, usize> = BTreeMap::new();
    let mut all = Vec::new();
    for record in &prepped {
        let (mut windows, skipped) = windowize(record, config, train_stride)?;
        excluded_at_train.insert(record.name.clone(), skipped);
        all.append(&mut windows);
    }
    if all.is_empty() {
        return Err(CliError::Data(
            "no windows produced; are the records shorter than window_len?".into(),
        ));
    }

    let mut split = split_by_record(all, config.split.as_tuple(), config.seed)
        .map_err(|e| CliError::Data(e.to_string()))?;

    // Validation/test use their own stride; regenerate those windows
    // from the already-assigned records.
    let mut excluded = 0usize;
    if eval_stride == train_stride {
        excluded = excluded_at_train.values().sum();
    } else {
        let by_name: BTreeMap<&str, &Prepped> =
            prepped.iter().map(|p| (p.name.as_str(), p)).collect();
        let mut validation = Vec::new();
        let mut test = Vec::new();
        for (name, assigned) in &split.provenance {
            match assigned {
                SplitName::Train => excluded += excluded_at_train[name],
                SplitName::Validation | SplitName::Test => {
                    let (mut windows, skipped) =
                        windowize(by_name[name.as_str()], config, eval_stride)?;
                    excluded += skipped;
                    if *assigned == SplitName::Validation {
                        validation.append(&mut windows);
                    } else {
                        test.append(&mut windows);
                    }
                }
            }
        }
        split.validation = validation;
        split.test = test;
    }

    let (normal, ischemic) = split.class_counts(SplitName::Train);
    if normal > 0 && ischemic > 0 {
        split.train = balance_classes(
            std::mem::take(&mut split.train),
            config.balance_ratio,
            config.seed,
        )
        .map_err(|e| CliError::Data(e.to_string()))?;
    } else {
        eprintln!("warning: train split is single-class; skipping oversampling");
    }

    let shards_dir = crate::shards::dir(config);
    fs::create_dir_all(&shards_dir)
        .map_err(|e| CliError::Other(format!("cannot create {}: {e}", shards_dir.display())))?;
    export_shards(&split, &shards_dir)
        .map_err(|e| CliError::Other(format!("cannot write shards: {e}")))?;

    let manifest = json!({
        "records": prepped.len(),
        "window_len": config.window_len,
        "train_stride": train_stride,
        "eval_stride": eval_stride,
        "protocol": format!("{:?}", config.protocol),
        "splits": {
            "train": split_summary(&split, SplitName::Train),
            "validation": split_summary(&split, SplitName::Validation),
            "test": split_summary(&split, SplitName::Test),
        },
        "excluded_windows": excluded,
        "checksum_warnings": prepped.iter().map(|p| p.checksum_warnings).sum::<usize>(),
        "annotation_issues": prepped.iter().map(|p| p.annotation_issues).sum::<usize>(),
        "config": config,
    });
    let manifest_path = config.output_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, text + "\n")
        .map_err(|e| CliError::Other(format!("cannot write {}: {e}", manifest_path.display())))?;

    for name in [SplitName::Train, SplitName::Validation, SplitName::Test] {
        let (normal, ischemic) = split.class_counts(name);
        println!(
            "{:<10} {:>6} windows ({normal} normal, {ischemic} ischemic)",
            format!("{name:?}").to_lowercase(),
            split.windows(name).len(),
        );
    }
    println!("shards: {}", shards_dir.display());
    println!("manifest: {}", manifest_path.display());
    Ok(())
}
