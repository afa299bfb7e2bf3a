//! WFDB header (`.hea`) text parsing.

use super::{RecordHeader, SignalSpec, StorageFormat, WfdbError};

const DEFAULT_GAIN: f64 = 200.0;

/// Parses the text of a `.hea` file.
///
/// Grammar handled: a record line
/// `name n_signals [rate[/counter[(base)]] [n_samples [time [date]]]]`
/// followed by one signal line per signal
/// `file format[xN][:skew][+off] [gain[(baseline)][/units] [adc_res [adc_zero [init [checksum [blk [description]]]]]]]`.
/// Comment lines start with `#` and blank lines are skipped. Multi-segment
/// headers are not supported.
pub fn parse_header(text: &str) -> Result<RecordHeader, WfdbError> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));

    let record_line = lines
        .next()
        .ok_or_else(|| WfdbError::MalformedHeader("empty header".into()))?;
    let mut header = parse_record_line(record_line)?;

    for i in 0..header.n_signals {
        let line = lines.next().ok_or_else(|| {
            WfdbError::MalformedHeader(format!(
                "expected {} signal lines, found {i}",
                header.n_signals
            ))
        })?;
        header.signals.push(parse_signal_line(line)?);
    }

    Ok(header)
}

fn parse_record_line(line: &str) -> Result<RecordHeader, WfdbError> {
    let mut tokens = line.split_whitespace();
    let name = tokens
        .next()
        .ok_or_else(|| WfdbError::MalformedHeader("missing record name".into()))?;
    // The record name may carry a segment count ("name/segments"); reject
    // multi-segment records.
    let record_name = match name.split_once('/') {
        None => name.to_string(),
        Some((_, _)) => {
            return Err(WfdbError::MalformedHeader(
                "multi-segment records are not supported".into(),
            ))
        }
    };

    let n_signals: usize = tokens
        .next()
        .ok_or_else(|| WfdbError::MalformedHeader("missing signal count".into()))?
        .parse()
        .map_err(|_| WfdbError::MalformedHeader("signal count is not an integer".into()))?;
    if n_signals == 0 {
        return Err(WfdbError::MalformedHeader(
            "record declares 0 signals".into(),
        ));
    }

    // Sampling rate defaults to 250 when absent; may carry "/counter(base)".
    let sampling_rate = match tokens.next() {
        None => 250.0,
        Some(tok) => {
            let rate_part = tok.split(['/', '(']).next().unwrap_or(tok);
            rate_part.parse::<f64>().map_err(|_| {
                WfdbError::MalformedHeader(format!("bad sampling rate {tok:?}"))
            })?
        }
    };
    if sampling_rate <= 0.0 {
        return Err(WfdbError::MalformedHeader(format!(
            "sampling rate must be positive, got {sampling_rate}"
        )));
    }

    let n_samples: u64 = match tokens.next() {
        None => 0,
        Some(tok) => tok
            .parse()
            .map_err(|_| WfdbError::MalformedHeader(format!("bad sample count {tok:?}")))?,
    };

    Ok(RecordHeader {
        record_name,
        n_signals,
        sampling_rate,
        n_samples,
        signals: Vec::with_capacity(n_signals),
    })
}

fn parse_signal_line(line: &str) -> Result<SignalSpec, WfdbError> {
    let mut tokens = line.split_whitespace();

    let file_name = tokens
        .next()
        .ok_or_else(|| WfdbError::MalformedHeader("signal line missing file name".into()))?
        .to_string();

    let format_tok = tokens
        .next()
        .ok_or_else(|| WfdbError::MalformedHeader("signal line missing format".into()))?;
    // Strip samples-per-frame, skew, and byte-offset decorations.
    let format_code: u16 = format_tok
        .split(['x', ':', '+'])
        .next()
        .unwrap_or(format_tok)
        .parse()
        .map_err(|_| WfdbError::MalformedHeader(format!("bad format field {format_tok:?}")))?;
    let storage_format = StorageFormat::from_code(format_code)?;

    // gain[(baseline)][/units]
    let (gain, explicit_baseline, units_label) = match tokens.next() {
        None => (DEFAULT_GAIN, None, "mV".to_string()),
        Some(tok) => parse_gain_field(tok)?,
    };
    if gain == 0.0 {
        return Err(WfdbError::MalformedHeader("signal gain is zero".into()));
    }

    let mut next_int = |what: &str| -> Result<Option<i32>, WfdbError> {
        match tokens.next() {
            None => Ok(None),
            Some(tok) => tok
                .parse::<i32>()
                .map(Some)
                .map_err(|_| WfdbError::MalformedHeader(format!("bad {what} field {tok:?}"))),
        }
    };

    let _adc_res = next_int("adc resolution")?;
    let adc_zero = next_int("adc zero")?.unwrap_or(0);
    let initial_value = next_int("initial value")?.unwrap_or(0);
    let checksum = next_int("checksum")? .unwrap_or(0) as i16;
    let _block_size = next_int("block size")?;

    let description = tokens.collect::<Vec<_>>().join(" ");

    Ok(SignalSpec {
        file_name,
        storage_format,
        gain,
        // Per the header conventions the baseline defaults to adc_zero.
        adc_baseline: explicit_baseline.unwrap_or(adc_zero),
        units_label,
        initial_value,
        checksum,
        description,
    })
}

/// Splits `gain[(baseline)][/units]`, e.g. `200`, `1000.0(0)/mV`, `200/mV`.
fn parse_gain_field(tok: &str) -> Result<(f64, Option<i32>, String), WfdbError> {
    let (before_units, units) = match tok.split_once('/') {
        Some((g, u)) => (g, u.to_string()),
        None => (tok, "mV".to_string()),
    };
    let (gain_str, baseline) = match before_units.split_once('(') {
        Some((g, rest)) => {
            let inner = rest.strip_suffix(')').ok_or_else(|| {
                WfdbError::MalformedHeader(format!("unclosed baseline in {tok:?}"))
            })?;
            let b: i32 = inner.parse().map_err(|_| {
                WfdbError::MalformedHeader(format!("bad baseline in {tok:?}"))
            })?;
            (g, Some(b))
        }
        None => (before_units, None),
    };
    let gain: f64 = gain_str
        .parse()
        .map_err(|_| WfdbError::MalformedHeader(format!("bad gain {tok:?}")))?;
    Ok((gain, baseline, units))
}

#[cfg(test)]
mod tests {
    use super::*;

    const LTST_STYLE: &str = "\
s20011 2 250 20594750
s20011.dat 212 200 12 0 -572 18680 0 ML2
s20011.dat 212 200 12 0 -763 -22514 0 MV2
# age 45 sex M
";

    #[test]
    fn parses_two_signal_record_line() {
        let h = parse_header(LTST_STYLE).unwrap();
        assert_eq!(h.record_name, "s20011");
        assert_eq!(h.n_signals, 2);
        assert_eq!(h.sampling_rate, 250.0);
        assert_eq!(h.n_samples, 20594750);
        assert_eq!(h.signals.len(), 2);
        assert_eq!(h.signals[0].description, "ML2");
        assert_eq!(h.signals[1].description, "MV2");
        assert_eq!(h.signals[0].gain, 200.0);
        assert_eq!(h.signals[0].adc_baseline, 0);
        assert_eq!(h.signals[1].initial_value, -763);
        assert_eq!(h.signals[1].checksum, -22514);
    }

    #[test]
    fn gain_defaults_when_omitted() {
        let h = parse_header("r 1 250 1000\nr.dat 212\n").unwrap();
        assert_eq!(h.signals[0].gain, 200.0);
        assert_eq!(h.signals[0].adc_baseline, 0);
    }

    #[test]
    fn gain_with_baseline_and_units() {
        let h = parse_header("r 1 500 10\nr.dat 16 1000.0(12)/uV 16 0 -119 1508 0 I\n").unwrap();
        let s = &h.signals[0];
        assert_eq!(s.gain, 1000.0);
        assert_eq!(s.adc_baseline, 12);
        assert_eq!(s.units_label, "uV");
        assert_eq!(s.storage_format, StorageFormat::Format16);
        assert_eq!(s.description, "I");
    }

    #[test]
    fn baseline_defaults_to_adc_zero() {
        let h = parse_header("r 1 250 10\nr.dat 212 200 12 1024 995 0 0 MLII\n").unwrap();
        assert_eq!(h.signals[0].adc_baseline, 1024);
    }

    #[test]
    fn zero_signals_is_malformed() {
        let err = parse_header("r 0 250\n").unwrap_err();
        assert!(matches!(err, WfdbError::MalformedHeader(_)));
    }

    #[test]
    fn missing_signal_line_is_malformed() {
        let err = parse_header("r 2 250 10\nr.dat 212 200\n").unwrap_err();
        assert!(matches!(err, WfdbError::MalformedHeader(_)));
    }

    #[test]
    fn unsupported_format_is_reported() {
        let err = parse_header("r 1 250 10\nr.dat 80 200\n").unwrap_err();
        assert!(matches!(err, WfdbError::UnsupportedFormat(80)));
    }

    #[test]
    fn comment_lines_are_skipped_anywhere() {
        let text = "# preamble\nr 1 250 10\n# between\nr.dat 212 200 12 0 0 0 0 X\n";
        let h = parse_header(text).unwrap();
        assert_eq!(h.signals[0].description, "X");
    }
}
