//! Whole-record loading and directory discovery.

use std::fs;
use std::path::{Path, PathBuf};

use super::signal::{read_signal, ChecksumMismatch};
use super::{
    adc_to_physical, parse_header, read_annotations, AnnotationEvent, EcgRecord, Protocol,
    WfdbError,
};

/// Locations of one record's files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordPaths {
    /// Record name as used in file stems, e.g. "s20011".
    pub name: String,
    /// Path to the `.hea` file; sibling files live next to it.
    pub header: PathBuf,
}

impl RecordPaths {
    pub fn from_header(header: impl Into<PathBuf>) -> Self {
        let header = header.into();
        let name = header
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self { name, header }
    }

    fn sibling(&self, file_name: &str) -> PathBuf {
        match self.header.parent() {
            Some(dir) => dir.join(file_name),
            None => PathBuf::from(file_name),
        }
    }

    /// Path of the annotation stream for `protocol` (e.g. `name.stb`).
    pub fn annotation_file(&self, protocol: Protocol) -> PathBuf {
        self.sibling(&format!("{}.{}", self.name, protocol.annotation_suffix()))
    }
}

/// Lists the records under a data root.
///
/// A `RECORDS` index file is honored when present (one record name per
/// line, `#` comments allowed); otherwise the directory is scanned for
/// `.hea` files. Either way only records whose header actually exists
/// are returned, sorted by name.
pub fn discover_records(root: &Path) -> Result<Vec<RecordPaths>, WfdbError> {
    if !root.is_dir() {
        return Err(WfdbError::MissingFile(root.display().to_string()));
    }
    let index = root.join("RECORDS");
    let mut found = Vec::new();
    if index.is_file() {
        for line in fs::read_to_string(&index)?.lines() {
            let name = line.trim();
            if name.is_empty() || name.starts_with('#') {
                continue;
            }
            let header = root.join(format!("{name}.hea"));
            if header.is_file() {
                found.push(RecordPaths::from_header(header));
            }
        }
    } else {
        for entry in fs::read_dir(root)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "hea") && path.is_file() {
                found.push(RecordPaths::from_header(path));
            }
        }
    }
    found.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(found)
}

/// Loads a record's header and all signal data, converted to mV.
///
/// Signals sharing one `.dat` file are de-interleaved together; the
/// output keeps the header's signal order. Checksum disagreements are
/// returned for the caller to report.
pub fn read_record(paths: &RecordPaths) -> Result<(EcgRecord, Vec<ChecksumMismatch>), WfdbError> {
    let text = fs::read_to_string(&paths.header)
        .map_err(|_| WfdbError::MissingFile(paths.header.display().to_string()))?;
    let header = parse_header(&text)?;
    let n_samples = usize::try_from(header.n_samples).expect("sample count fits in usize");

    let mut signals: Vec<Option<Vec<f64>>> = vec![None; header.n_signals];
    let mut mismatches = Vec::new();

    // Group consecutive signals that share a .dat file.
    let mut start = 0usize;
    while start < header.n_signals {
        let file_name = &header.signals[start].file_name;
        let mut end = start + 1;
        while end < header.n_signals && &header.signals[end].file_name == file_name {
            end += 1;
        }
        let group = &header.signals[start..end];
        let path = paths.sibling(file_name);
        let bytes =
            fs::read(&path).map_err(|_| WfdbError::MissingFile(path.display().to_string()))?;
        let (leads, warns) = read_signal(group, &bytes, n_samples)?;
        for w in warns {
            mismatches.push(ChecksumMismatch { signal: start + w.signal, ..w });
        }
        for (offset, raw) in leads.into_iter().enumerate() {
            let spec = &header.signals[start + offset];
            let physical = raw.iter().map(|&v| adc_to_physical(v, spec)).collect();
            signals[start + offset] = Some(physical);
        }
        start = end;
    }

    let signals = signals.into_iter().map(|s| s.expect("all groups filled")).collect();
    Ok((EcgRecord { header, signals }, mismatches))
}

/// Reads and parses the protocol annotation stream for a record.
pub fn read_record_annotations(
    paths: &RecordPaths,
    protocol: Protocol,
) -> Result<Vec<AnnotationEvent>, WfdbError> {
    let path = paths.annotation_file(protocol);
    let bytes = fs::read(&path).map_err(|_| WfdbError::MissingFile(path.display().to_string()))?;
    read_annotations(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wfdb::signal::encode_212;
    use crate::wfdb::write_annotations;

    fn write_fixture(dir: &Path, name: &str) {
        // Two leads, three frames: (1, 2), (3, 4), (5, 6).
        let data = encode_212(&[1, 2, 3, 4, 5, 6]);
        fs::write(dir.join(format!("{name}.dat")), data).unwrap();
        let hea = format!(
            "{name} 2 250 3\n\
             {name}.dat 212 200 12 0 1 9 0 ML2\n\
             {name}.dat 212 100(2) 12 0 2 12 0 MV2\n"
        );
        fs::write(dir.join(format!("{name}.hea")), hea).unwrap();
    }

    #[test]
    fn read_record_converts_to_millivolts() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture(dir.path(), "s1");
        let paths = RecordPaths::from_header(dir.path().join("s1.hea"));
        assert_eq!(paths.name, "s1");
        let (record, warns) = read_record(&paths).unwrap();
        assert!(warns.is_empty(), "{warns:?}");
        assert_eq!(record.header.n_signals, 2);
        assert_eq!(record.signals[0], vec![1.0 / 200.0, 3.0 / 200.0, 5.0 / 200.0]);
        // Lead 1 has gain 100 and baseline 2.
        assert_eq!(record.signals[1], vec![0.0, 2.0 / 100.0, 4.0 / 100.0]);
        assert_eq!(record.lead_name(1), "MV2");
    }

    #[test]
    fn read_record_reports_stale_checksums() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture(dir.path(), "s1");
        let hea = dir.path().join("s1.hea");
        let text = fs::read_to_string(&hea).unwrap().replace(" 12 0 MV2", " 99 0 MV2");
        fs::write(&hea, text).unwrap();
        let paths = RecordPaths::from_header(hea);
        let (_, warns) = read_record(&paths).unwrap();
        assert_eq!(warns, vec![ChecksumMismatch { signal: 1, expected: 99, computed: 12 }]);
    }

    #[test]
    fn read_record_missing_dat_is_missing_file() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture(dir.path(), "s1");
        fs::remove_file(dir.path().join("s1.dat")).unwrap();
        let paths = RecordPaths::from_header(dir.path().join("s1.hea"));
        assert!(matches!(read_record(&paths), Err(WfdbError::MissingFile(_))));
    }

    #[test]
    fn discover_prefers_records_index() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture(dir.path(), "s2");
        write_fixture(dir.path(), "s1");
        write_fixture(dir.path(), "s3");
        // Index lists a subset, plus one record with no header on disk.
        fs::write(dir.path().join("RECORDS"), "# index\ns3\ns1\nmissing\n").unwrap();
        let names: Vec<_> = discover_records(dir.path())
            .unwrap()
            .into_iter()
            .map(|r| r.name)
            .collect();
        assert_eq!(names, vec!["s1", "s3"]);
    }

    #[test]
    fn discover_scans_headers_without_index() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture(dir.path(), "s2");
        write_fixture(dir.path(), "s1");
        fs::write(dir.path().join("notes.txt"), "ignore me").unwrap();
        let names: Vec<_> = discover_records(dir.path())
            .unwrap()
            .into_iter()
            .map(|r| r.name)
            .collect();
        assert_eq!(names, vec!["s1", "s2"]);
    }

    #[test]
    fn discover_missing_root_errors() {
        assert!(matches!(
            discover_records(Path::new("/nonexistent/ltst")),
            Err(WfdbError::MissingFile(_))
        ));
    }

    #[test]
    fn annotation_round_trip_through_files() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture(dir.path(), "s1");
        let events = vec![AnnotationEvent {
            sample_index: 42,
            code: 22,
            subtype: 0,
            channel: 0,
            num_field: 0,
            aux: Some("(st0".into()),
        }];
        let paths = RecordPaths::from_header(dir.path().join("s1.hea"));
        fs::write(paths.annotation_file(Protocol::B), write_annotations(&events)).unwrap();
        assert_eq!(read_record_annotations(&paths, Protocol::B).unwrap(), events);
        assert!(matches!(
            read_record_annotations(&paths, Protocol::A),
            Err(WfdbError::MissingFile(_))
        ));
    }
}
