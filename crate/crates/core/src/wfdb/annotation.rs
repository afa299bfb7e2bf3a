//! MIT-format binary annotation streams.
//!
//! The stream is a sequence of 16-bit little-endian words. The top 6
//! bits of each word are an annotation code, the low 10 bits a data
//! field (usually the sample delta from the previous annotation).
//! Codes 59..=63 are pseudo-annotations that carry side information:
//!
//! * `SKIP` (59): followed by a 4-byte interval in PDP-11 order (high
//!   16 bits first, each half little-endian) added to the delta of the
//!   next annotation.
//! * `NUM` (60): sets the num field of the previous annotation and of
//!   every later one until changed.
//! * `SUB` (61): sets the subtype of the previous annotation only.
//! * `CHN` (62): sets the channel of the previous annotation and of
//!   every later one until changed.
//! * `AUX` (63): data field is a byte count; that many bytes of aux
//!   text follow (plus a pad byte when odd), attached to the previous
//!   annotation.
//!
//! A zero word terminates the stream.

use super::{AnnotationEvent, WfdbError};

const SKIP: u8 = 59;
const NUM: u8 = 60;
const SUB: u8 = 61;
const CHN: u8 = 62;
const AUX: u8 = 63;

/// Sign-extends a 10-bit data field.
fn signed_data(data: u16) -> i16 {
    if data & 0x200 != 0 {
        (data | 0xFC00) as i16
    } else {
        data as i16
    }
}

/// Parses a complete annotation stream into time-ordered events.
pub fn read_annotations(bytes: &[u8]) -> Result<Vec<AnnotationEvent>, WfdbError> {
    let mut events: Vec<AnnotationEvent> = Vec::new();
    let mut pos = 0usize;
    let mut time: u64 = 0;
    let mut pending_skip: i64 = 0;
    let mut cur_chan: u8 = 0;
    let mut cur_num: i8 = 0;

    while pos + 1 < bytes.len() {
        let word = u16::from_le_bytes([bytes[pos], bytes[pos + 1]]);
        pos += 2;
        if word == 0 {
            return Ok(events);
        }
        let code = (word >> 10) as u8;
        let data = word & 0x3FF;
        match code {
            SKIP => {
                if pos + 4 > bytes.len() {
                    return Err(WfdbError::TruncatedStream(pos));
                }
                let high = u16::from_le_bytes([bytes[pos], bytes[pos + 1]]);
                let low = u16::from_le_bytes([bytes[pos + 2], bytes[pos + 3]]);
                pos += 4;
                let interval = ((i32::from(high as i16)) << 16) | i32::from(low);
                pending_skip += i64::from(interval);
            }
            NUM => {
                cur_num = signed_data(data) as i8;
                let at = pos - 2;
                let last = events.last_mut().ok_or(WfdbError::DanglingAux(at))?;
                last.num_field = cur_num;
            }
            SUB => {
                let at = pos - 2;
                let last = events.last_mut().ok_or(WfdbError::DanglingAux(at))?;
                last.subtype = signed_data(data) as i8;
            }
            CHN => {
                cur_chan = data as u8;
                let at = pos - 2;
                let last = events.last_mut().ok_or(WfdbError::DanglingAux(at))?;
                last.channel = cur_chan;
            }
            AUX => {
                let at = pos - 2;
                let len = usize::from(data);
                let padded = len + (len & 1);
                if pos + padded > bytes.len() {
                    return Err(WfdbError::TruncatedStream(pos));
                }
                let raw = &bytes[pos..pos + len];
                pos += padded;
                let text = String::from_utf8_lossy(raw)
                    .trim_end_matches('\0')
                    .to_string();
                let last = events.last_mut().ok_or(WfdbError::DanglingAux(at))?;
                last.aux = Some(text);
            }
            _ => {
                let step = pending_skip + i64::from(data);
                pending_skip = 0;
                time = time
                    .checked_add_signed(step)
                    .ok_or(WfdbError::TruncatedStream(pos - 2))?;
                events.push(AnnotationEvent {
                    sample_index: time,
                    code,
                    subtype: 0,
                    channel: cur_chan,
                    num_field: cur_num,
                    aux: None,
                });
            }
        }
    }
    // Streams written by this crate always end in a zero word, but a
    // clean word-boundary EOF is accepted from other writers.
    if pos < bytes.len() {
        return Err(WfdbError::TruncatedStream(pos));
    }
    Ok(events)
}

/// Serializes events (which must be sorted by `sample_index`) into the
/// binary stream format accepted by [`read_annotations`].
pub fn write_annotations(events: &[AnnotationEvent]) -> Vec<u8> {
    let mut out = Vec::new();
    let mut time: u64 = 0;
    let mut cur_chan: u8 = 0;
    let mut cur_num: i8 = 0;

    let word = |out: &mut Vec<u8>, code: u8, data: u16| {
        let w = (u16::from(code) << 10) | (data & 0x3FF);
        out.extend_from_slice(&w.to_le_bytes());
    };

    for ev in events {
        assert!(ev.sample_index >= time, "events must be time-ordered");
        assert!(ev.code >= 1 && ev.code < SKIP, "not a content code: {}", ev.code);
        let mut delta = ev.sample_index - time;
        time = ev.sample_index;
        if delta > 0x3FF {
            word(&mut out, SKIP, 0);
            let interval = i32::try_from(delta).expect("inter-annotation gap fits in i32");
            out.extend_from_slice(&(((interval >> 16) & 0xFFFF) as u16).to_le_bytes());
            out.extend_from_slice(&((interval & 0xFFFF) as u16).to_le_bytes());
            delta = 0;
        }
        word(&mut out, ev.code, delta as u16);
        if ev.channel != cur_chan {
            cur_chan = ev.channel;
            word(&mut out, CHN, u16::from(ev.channel));
        }
        if ev.num_field != cur_num {
            cur_num = ev.num_field;
            word(&mut out, NUM, ev.num_field as u16);
        }
        if ev.subtype != 0 {
            word(&mut out, SUB, ev.subtype as u16);
        }
        if let Some(aux) = &ev.aux {
            let bytes = aux.as_bytes();
            assert!(bytes.len() <= 0x3FF, "aux text too long");
            word(&mut out, AUX, bytes.len() as u16);
            out.extend_from_slice(bytes);
            if bytes.len() % 2 == 1 {
                out.push(0);
            }
        }
    }
    out.extend_from_slice(&[0, 0]);
    out
}
