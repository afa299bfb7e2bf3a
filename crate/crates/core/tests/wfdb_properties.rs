//! Round-trip and grammar properties of the WFDB codecs.

use proptest::prelude::*;
use stdetect_core::wfdb::{
    decode_212, encode_212, extract_st_episodes, parse_st_aux, read_annotations,
    write_annotations, AnnotationEvent, Protocol, StAuxMarker,
};

fn sample_12bit() -> impl Strategy<Value = i16> {
    -2048i16..=2047
}

proptest! {
    /// Encoding then decoding any 12-bit sample vector is the
    /// identity, for both parities of the final group.
    #[test]
    fn format_212_round_trips(samples in prop::collection::vec(sample_12bit(), 0..200)) {
        let bytes = encode_212(&samples);
        let decoded = decode_212(&bytes).unwrap();
        prop_assert_eq!(decoded, samples);
    }

    /// Even-length vectors pack exactly 3 bytes per pair; odd lengths
    /// add a 2-byte tail.
    #[test]
    fn format_212_size_arithmetic(samples in prop::collection::vec(sample_12bit(), 0..64)) {
        let bytes = encode_212(&samples);
        let expected = samples.len() / 2 * 3 + samples.len() % 2 * 2;
        prop_assert_eq!(bytes.len(), expected);
    }
}

fn arbitrary_events() -> impl Strategy<Value = Vec<AnnotationEvent>> {
    // Deltas above 1023 force SKIP emission; aux strings exercise the
    // odd/even padding branches.
    let event = (
        1u64..2000,
        1u8..=49,
        -4i8..=4,
        0u8..4,
        -2i8..=2,
        prop::option::of("[a-z(){}0-9+-]{0,9}"),
    );
    prop::collection::vec(event, 0..40).prop_map(|raw| {
        let mut sample = 0u64;
        raw.into_iter()
            .map(|(delta, code, subtype, channel, num_field, aux)| {
                sample += delta;
                AnnotationEvent { sample_index: sample, code, subtype, channel, num_field, aux }
            })
            .collect()
    })
}

proptest! {
    /// The annotation stream codec is lossless for arbitrary
    /// well-formed event sequences, including SKIP intervals, sticky
    /// NUM/CHN state, and padded aux strings.
    #[test]
    fn annotation_stream_round_trips(events in arbitrary_events()) {
        let bytes = write_annotations(&events);
        prop_assert_eq!(bytes.len() % 2, 0, "stream must stay word-aligned");
        let decoded = read_annotations(&bytes).unwrap();
        prop_assert_eq!(decoded, events);
    }
}

#[test]
fn long_gaps_survive_the_skip_path() {
    // 10-bit deltas cap at 1023; these gaps require SKIP words.
    let events: Vec<AnnotationEvent> = [5u64, 100_000, 100_001, 90_000_000]
        .iter()
        .map(|&s| AnnotationEvent {
            sample_index: s,
            code: 1,
            subtype: 0,
            channel: 0,
            num_field: 0,
            aux: None,
        })
        .collect();
    let decoded = read_annotations(&write_annotations(&events)).unwrap();
    assert_eq!(decoded, events);
}

#[test]
fn st_aux_grammar_accepts_the_three_marker_forms() {
    assert_eq!(parse_st_aux("(st0"), Some(StAuxMarker::Begin { lead: 0 }));
    assert_eq!(parse_st_aux("(st2"), Some(StAuxMarker::Begin { lead: 2 }));
    assert_eq!(
        parse_st_aux("ast1-150"),
        Some(StAuxMarker::Extremum { lead: 1, deviation_uv: -150.0 })
    );
    assert_eq!(
        parse_st_aux("ast0+225"),
        Some(StAuxMarker::Extremum { lead: 0, deviation_uv: 225.0 })
    );
    assert_eq!(parse_st_aux("st0)"), Some(StAuxMarker::End { lead: 0 }));
    for garbage in ["", "st", "(st", "(st12", "ast0", "ast0-", "st)", "N", "(sta", "xst0)"] {
        assert_eq!(parse_st_aux(garbage), None, "{garbage:?}");
    }
}

fn marker_event(sample: u64, aux: &str) -> AnnotationEvent {
    AnnotationEvent {
        sample_index: sample,
        code: 28,
        subtype: 0,
        channel: 0,
        num_field: 0,
        aux: Some(aux.to_string()),
    }
}

#[test]
fn interleaved_leads_pair_up_independently() {
    let events = vec![
        marker_event(1000, "(st0"),
        marker_event(1500, "(st1"),
        marker_event(2000, "ast0-120"),
        marker_event(2500, "ast1+180"),
        marker_event(9000, "st0)"),
        marker_event(9500, "st1)"),
    ];
    let (episodes, issues) = extract_st_episodes(&events, Protocol::B);
    assert!(issues.is_empty(), "{issues:?}");
    assert_eq!(episodes.len(), 2);
    assert_eq!(
        (episodes[0].lead, episodes[0].start_sample, episodes[0].end_sample),
        (0, 1000, 9000)
    );
    assert_eq!(episodes[0].deviation_uv, -120.0);
    assert_eq!(
        (episodes[1].lead, episodes[1].start_sample, episodes[1].end_sample),
        (1, 1500, 9500)
    );
    assert_eq!(episodes[1].deviation_uv, 180.0);
}

#[test]
fn protocol_thresholds_bind_at_the_boundary() {
    let episode = |dev: f64, len: u64| stdetect_core::StEpisode {
        lead: 0,
        start_sample: 0,
        extremum_sample: len / 2,
        end_sample: len,
        deviation_uv: dev,
        protocol: Protocol::B,
    };
    let rate = 250.0;
    // 30 s at 250 Hz is 7500 samples; 100 uV is the magnitude floor.
    assert!(episode(-100.0, 7500).satisfies_protocol(rate));
    assert!(episode(100.0, 7500).satisfies_protocol(rate));
    assert!(!episode(-99.9, 7500).satisfies_protocol(rate));
    assert!(!episode(-100.0, 7499).satisfies_protocol(rate));
    assert!(episode(-250.0, 80_000).satisfies_protocol(rate));
}
