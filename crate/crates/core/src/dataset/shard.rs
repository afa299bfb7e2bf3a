//! Binary shard files plus a JSON provenance sidecar.
//!
//! Layout per shard: 8-byte magic `ECGWIN01`, then little-endian
//! `count: u64` and `window_len: u64`, then `count` records of
//! `id_len: u32, id bytes, lead: u8, start: u64, label: u8,
//! window_len f32 samples`. One shard per split, named
//! `train.ecgwin` / `validation.ecgwin` / `test.ecgwin`, with the
//! record-to-split map in `provenance.json` alongside.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{DatasetError, DatasetSplit, EcgWindow, Label, SplitName};

pub const SHARD_MAGIC: &[u8; 8] = b"ECGWIN01";

const SPLIT_FILES: [(SplitName, &str); 3] = [
    (SplitName::Train, "train.ecgwin"),
    (SplitName::Validation, "validation.ecgwin"),
    (SplitName::Test, "test.ecgwin"),
];

/// Writes the three shard files and the provenance sidecar into `dir`
/// (created if needed).
pub fn export_shards(split: &DatasetSplit, dir: &Path) -> Result<(), DatasetError> {
    fs::create_dir_all(dir)?;
    for (name, file) in SPLIT_FILES {
        write_shard(split.windows(name), &dir.join(file))?;
    }
    let provenance = serde_json::to_string_pretty(&split.provenance)
        .expect("provenance map serializes");
    fs::write(dir.join("provenance.json"), provenance)?;
    Ok(())
}

/// Reads back what [`export_shards`] wrote.
pub fn import_shards(dir: &Path) -> Result<DatasetSplit, DatasetError> {
    let mut split = DatasetSplit::default();
    for (name, file) in SPLIT_FILES {
        let windows = read_shard(&dir.join(file))?;
        match name {
            SplitName::Train => split.train = windows,
            SplitName::Validation => split.validation = windows,
            SplitName::Test => split.test = windows,
        }
    }
    let sidecar = dir.join("provenance.json");
    let text = fs::read_to_string(&sidecar)?;
    split.provenance = serde_json::from_str::<BTreeMap<String, SplitName>>(&text)
        .map_err(|e| DatasetError::CorruptShard(format!("provenance sidecar: {e}")))?;
    Ok(split)
}

fn write_shard(windows: &[EcgWindow], path: &Path) -> Result<(), DatasetError> {
    let window_len = windows.first().map_or(0, |w| w.samples.len());
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(SHARD_MAGIC)?;
    out.write_all(&(windows.len() as u64).to_le_bytes())?;
    out.write_all(&(window_len as u64).to_le_bytes())?;
    for w in windows {
        debug_assert_eq!(w.samples.len(), window_len, "mixed window lengths in one shard");
        out.write_all(&(w.record_id.len() as u32).to_le_bytes())?;
        out.write_all(w.record_id.as_bytes())?;
        out.write_all(&[w.lead])?;
        out.write_all(&w.start_sample.to_le_bytes())?;
        out.write_all(&[w.label.code()])?;
        for &v in &w.samples {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

fn read_shard(path: &Path) -> Result<Vec<EcgWindow>, DatasetError> {
    let corrupt = |what: &str| DatasetError::CorruptShard(format!("{}: {what}", path.display()));
    let mut input = BufReader::new(File::open(path)?);

    let mut magic = [0u8; 8];
    read_exact_or(&mut input, &mut magic, || corrupt("missing magic"))?;
    if &magic != SHARD_MAGIC {
        return Err(corrupt("bad magic"));
    }
    let count = read_u64(&mut input, || corrupt("truncated header"))?;
    let window_len = read_u64(&mut input, || corrupt("truncated header"))? as usize;

    let mut windows = Vec::new();
    for _ in 0..count {
        let id_len = read_u32(&mut input, || corrupt("truncated record id length"))? as usize;
        if id_len > 4096 {
            return Err(corrupt("implausible record id length"));
        }
        let mut id = vec![0u8; id_len];
        read_exact_or(&mut input, &mut id, || corrupt("truncated record id"))?;
        let record_id = String::from_utf8(id).map_err(|_| corrupt("record id not UTF-8"))?;
        let mut small = [0u8; 1];
        read_exact_or(&mut input, &mut small, || corrupt("truncated lead"))?;
        let lead = small[0];
        let start_sample = read_u64(&mut input, || corrupt("truncated start"))?;
        read_exact_or(&mut input, &mut small, || corrupt("truncated label"))?;
        let label = Label::from_code(small[0]).ok_or_else(|| corrupt("unknown label code"))?;
        let mut raw = vec![0u8; window_len * 4];
        read_exact_or(&mut input, &mut raw, || corrupt("truncated samples"))?;
        let samples = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        windows.push(EcgWindow { record_id, lead, start_sample, samples, label });
    }
    let mut extra = [0u8; 1];
    if input.read(&mut extra)? != 0 {
        return Err(corrupt("trailing bytes"));
    }
    Ok(windows)
}

fn read_exact_or<R: Read>(
    r: &mut R,
    buf: &mut [u8],
    err: impl Fn() -> DatasetError,
) -> Result<(), DatasetError> {
    r.read_exact(buf).map_err(|_| err())
}

fn read_u64<R: Read>(r: &mut R, err: impl Fn() -> DatasetError) -> Result<u64, DatasetError> {
    let mut b = [0u8; 8];
    read_exact_or(r, &mut b, err)?;
    Ok(u64::from_le_bytes(b))
}

fn read_u32<R: Read>(r: &mut R, err: impl Fn() -> DatasetError) -> Result<u32, DatasetError> {
    let mut b = [0u8; 4];
    read_exact_or(r, &mut b, err)?;
    Ok(u32::from_le_bytes(b))
}
