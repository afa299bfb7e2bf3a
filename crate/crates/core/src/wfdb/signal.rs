//! Signal file (`.dat`) decoding for formats 212 and 16.

use super::{SignalSpec, StorageFormat, WfdbError};

/// Decodes a format-212 byte stream into 12-bit two's-complement samples.
///
/// Every 3 bytes hold two samples: byte 0 is the low byte of the first
/// sample, the low nibble of byte 1 its high bits; the high nibble of
/// byte 1 and byte 2 form the second sample. A trailing 2-byte group
/// (low byte + nibble) carries a final odd sample.
pub fn decode_212(bytes: &[u8]) -> Result<Vec<i16>, WfdbError> {
    let (groups, tail) = (bytes.len() / 3, bytes.len() % 3);
    if tail == 1 {
        return Err(WfdbError::TruncatedData {
            needed: bytes.len() + 1,
            have: bytes.len(),
        });
    }
    let mut out = Vec::with_capacity(groups * 2 + usize::from(tail == 2));
    for chunk in bytes.chunks_exact(3) {
        let first = u16::from(chunk[0]) | (u16::from(chunk[1] & 0x0F) << 8);
        let second = u16::from(chunk[2]) | (u16::from(chunk[1] & 0xF0) << 4);
        out.push(sign_extend_12(first));
        out.push(sign_extend_12(second));
    }
    if tail == 2 {
        let rest = &bytes[groups * 3..];
        let only = u16::from(rest[0]) | (u16::from(rest[1] & 0x0F) << 8);
        out.push(sign_extend_12(only));
    }
    Ok(out)
}

/// Packs 12-bit samples back into format-212 bytes (inverse of
/// [`decode_212`]). Values outside [-2048, 2047] are clamped.
pub fn encode_212(samples: &[i16]) -> Vec<u8> {
    let mut out = Vec::with_capacity(samples.len() / 2 * 3 + 2);
    let mut pairs = samples.chunks_exact(2);
    for pair in &mut pairs {
        let a = to_u12(pair[0]);
        let b = to_u12(pair[1]);
        out.push((a & 0xFF) as u8);
        out.push(((a >> 8) as u8 & 0x0F) | (((b >> 8) as u8 & 0x0F) << 4));
        out.push((b & 0xFF) as u8);
    }
    if let [last] = pairs.remainder() {
        let a = to_u12(*last);
        out.push((a & 0xFF) as u8);
        out.push((a >> 8) as u8 & 0x0F);
    }
    out
}

fn sign_extend_12(v: u16) -> i16 {
    if v & 0x800 != 0 {
        (v | 0xF000) as i16
    } else {
        v as i16
    }
}

fn to_u12(v: i16) -> u16 {
    (v.clamp(-2048, 2047) as u16) & 0x0FFF
}

fn decode_16(bytes: &[u8]) -> Vec<i16> {
    bytes
        .chunks_exact(2)
        .map(|c| i16::from_le_bytes([c[0], c[1]]))
        .collect()
}

/// Non-fatal findings from [`read_signal`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChecksumMismatch {
    pub signal: usize,
    pub expected: i16,
    pub computed: i16,
}

/// Reads a `.dat` file shared by `specs.len()` interleaved signals and
/// returns one ADC-unit sequence per signal.
///
/// All signals in one file must use the same storage format. Checksum
/// disagreements are reported, not fatal; real long-term records
/// occasionally carry stale checksums.
pub fn read_signal(
    specs: &[SignalSpec],
    bytes: &[u8],
    n_samples: usize,
) -> Result<(Vec<Vec<i16>>, Vec<ChecksumMismatch>), WfdbError> {
    assert!(!specs.is_empty(), "read_signal needs at least one signal spec");
    let format = specs[0].storage_format;

    let total = specs.len() * n_samples;
    let needed = match format {
        // Pairs of samples share 3 bytes; a final odd sample needs 2.
        StorageFormat::Format212 => total / 2 * 3 + (total % 2) * 2,
        StorageFormat::Format16 => total * 2,
    };
    if bytes.len() < needed {
        return Err(WfdbError::TruncatedData {
            needed,
            have: bytes.len(),
        });
    }

    let flat = match format {
        StorageFormat::Format212 => decode_212(&bytes[..needed])?,
        StorageFormat::Format16 => decode_16(&bytes[..needed]),
    };

    let mut leads = vec![Vec::with_capacity(n_samples); specs.len()];
    for frame in flat.chunks_exact(specs.len()).take(n_samples) {
        for (lead, &v) in leads.iter_mut().zip(frame) {
            lead.push(v);
        }
    }

    let mut mismatches = Vec::new();
    for (i, (spec, lead)) in specs.iter().zip(&leads).enumerate() {
        let computed = checksum(lead);
        if computed != spec.checksum {
            mismatches.push(ChecksumMismatch {
                signal: i,
                expected: spec.checksum,
                computed,
            });
        }
    }

    Ok((leads, mismatches))
}

/// 16-bit signed sum of samples, the header checksum convention.
pub(crate) fn checksum(samples: &[i16]) -> i16 {
    samples
        .iter()
        .fold(0i16, |acc, &s| acc.wrapping_add(s))
}

/// Converts raw ADC units to millivolts: `(raw - baseline) / gain`.
pub fn adc_to_physical(raw: i16, spec: &SignalSpec) -> f64 {
    f64::from(i32::from(raw) - spec.adc_baseline) / spec.gain
}
