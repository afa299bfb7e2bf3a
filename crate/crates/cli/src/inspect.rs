//! `stdetect inspect` — summarize one record without building anything.

use std::path::Path;

use serde_json::json;
use stdetect_core::wfdb::{
    extract_st_episodes, read_record, read_record_annotations, RecordPaths, WfdbError,
};
use stdetect_core::Protocol;

use crate::error::CliError;

/// Episode count per protocol; `None` when that protocol's annotation
/// file is absent (absence is normal, a corrupt stream is not).
fn episode_counts(paths: &RecordPaths) -> Result<Vec<(Protocol, Option<usize>)>, CliError> {
    let mut counts = Vec::new();
    for protocol in [Protocol::A, Protocol::B, Protocol::C] {
        let count = match read_record_annotations(paths, protocol) {
            Ok(events) => Some(extract_st_episodes(&events, protocol).0.len()),
            Err(WfdbError::MissingFile(_)) => None,
            Err(e) => {
                let file = paths.annotation_file(protocol);
                return Err(CliError::Usage(format!("{}: {e}", file.display())));
            }
        };
        counts.push((protocol, count));
    }
    Ok(counts)
}

pub fn run(record: &Path, as_json: bool) -> Result<(), CliError> {
    let header = if record.extension().is_some_and(|e| e == "hea") {
        record.to_path_buf()
    } else {
        record.with_extension("hea")
    };
    let paths = RecordPaths::from_header(&header);
    let (record, checksum_warnings) =
        read_record(&paths).map_err(|e| CliError::Usage(format!("{}: {e}", header.display())))?;
    let counts = episode_counts(&paths)?;
    for w in &checksum_warnings {
        eprintln!(
            "warning: {}: signal {} checksum {} != stored {}",
            header.display(),
            w.signal,
            w.computed,
            w.expected
        );
    }

    let leads: Vec<&str> = (0..record.header.n_signals).map(|l| record.lead_name(l)).collect();
    if as_json {
        let episodes: serde_json::Map<String, serde_json::Value> = counts
            .iter()
            .map(|(p, n)| (format!("{p:?}"), json!(n)))
            .collect();
        let summary = json!({
            "record": record.header.record_name,
            "leads": leads,
            "sampling_rate_hz": record.header.sampling_rate,
            "n_samples": record.header.n_samples,
            "duration_secs": record.header.duration_secs(),
            "episodes": episodes,
            "checksum_warnings": checksum_warnings.len(),
        });
        println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    } else {
        println!("record {}", record.header.record_name);
        println!("leads {}: {}", leads.len(), leads.join(", "));
        println!("sampling rate {} Hz", record.header.sampling_rate);
        println!(
            "samples {} ({:.1} s)",
            record.header.n_samples,
            record.header.duration_secs()
        );
        for (protocol, count) in &counts {
            match count {
                Some(n) => println!("protocol {protocol:?} episodes: {n}"),
                None => println!("protocol {protocol:?} episodes: (no annotation file)"),
            }
        }
        println!("checksum warnings: {}", checksum_warnings.len());
    }
    Ok(())
}
