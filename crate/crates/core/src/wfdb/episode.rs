//! ST episode extraction from annotation aux text.
//!
//! Episode boundaries live in the aux strings of the protocol
//! annotation stream. Three marker forms exist, each naming the lead
//! by a trailing digit:
//!
//! | aux text     | meaning                                    |
//! |--------------|--------------------------------------------|
//! | `(st0`       | episode begins in lead 0                   |
//! | `ast0-183`   | extremum in lead 0, deviation -183 uV      |
//! | `st0)`       | episode ends in lead 0                     |

use super::{AnnotationEvent, Protocol, StEpisode};

/// A decoded episode-boundary marker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StAuxMarker {
    Begin { lead: usize },
    Extremum { lead: usize, deviation_uv: f64 },
    End { lead: usize },
}

/// Structural problems found while pairing episode markers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EpisodeIssue {
    /// A begin marker that was never closed, or was superseded by a
    /// second begin on the same lead.
    UnmatchedBegin { lead: usize, sample: u64 },
    /// An end marker with no open episode on its lead.
    UnmatchedEnd { lead: usize, sample: u64 },
    /// An extremum marker outside any open episode on its lead.
    OrphanExtremum { lead: usize, sample: u64 },
    /// An episode that closed without ever reporting an extremum; no
    /// episode is emitted for it.
    MissingExtremum { lead: usize, start: u64, end: u64 },
}

/// Decodes one aux string into a marker, or `None` for non-episode aux
/// text (rhythm notes, noise flags, and so on).
pub fn parse_st_aux(aux: &str) -> Option<StAuxMarker> {
    let s = aux.trim();
    if let Some(rest) = s.strip_prefix("(st") {
        let lead = single_digit(rest)?;
        return match &rest[1..] {
            "" => Some(StAuxMarker::Begin { lead }),
            _ => None,
        };
    }
    if let Some(rest) = s.strip_prefix("ast") {
        let lead = single_digit(rest)?;
        let dev: &str = &rest[1..];
        if !dev.starts_with('+') && !dev.starts_with('-') {
            return None;
        }
        let magnitude: i64 = dev[1..].parse().ok()?;
        let signed = if dev.starts_with('-') { -magnitude } else { magnitude };
        return Some(StAuxMarker::Extremum { lead, deviation_uv: signed as f64 });
    }
    if let Some(rest) = s.strip_prefix("st") {
        let lead = single_digit(rest)?;
        return match &rest[1..] {
            ")" => Some(StAuxMarker::End { lead }),
            _ => None,
        };
    }
    None
}

fn single_digit(s: &str) -> Option<usize> {
    let c = s.chars().next()?;
    c.to_digit(10).map(|d| d as usize)
}

#[derive(Debug)]
struct OpenEpisode {
    start: u64,
    extremum: Option<(u64, f64)>,
}

/// Pairs begin/extremum/end markers into episodes, per lead.
///
/// Events must be time-ordered (as produced by
/// [`read_annotations`](super::read_annotations)). Malformed marker
/// sequences are reported as issues rather than errors so that one bad
/// stretch does not discard a record's remaining episodes.
pub fn extract_st_episodes(
    events: &[AnnotationEvent],
    protocol: Protocol,
) -> (Vec<StEpisode>, Vec<EpisodeIssue>) {
    let mut open: std::collections::BTreeMap<usize, OpenEpisode> = Default::default();
    let mut episodes = Vec::new();
    let mut issues = Vec::new();

    for event in events {
        let Some(marker) = event.aux.as_deref().and_then(parse_st_aux) else {
            continue;
        };
        let sample = event.sample_index;
        match marker {
            StAuxMarker::Begin { lead } => {
                if let Some(stale) = open.insert(lead, OpenEpisode { start: sample, extremum: None }) {
                    issues.push(EpisodeIssue::UnmatchedBegin { lead, sample: stale.start });
                }
            }
            StAuxMarker::Extremum { lead, deviation_uv } => match open.get_mut(&lead) {
                Some(ep) => {
                    // Keep the largest-magnitude extremum if several appear.
                    let replace = ep
                        .extremum
                        .is_none_or(|(_, dev)| deviation_uv.abs() > dev.abs());
                    if replace {
                        ep.extremum = Some((sample, deviation_uv));
                    }
                }
                None => issues.push(EpisodeIssue::OrphanExtremum { lead, sample }),
            },
            StAuxMarker::End { lead } => match open.remove(&lead) {
                Some(OpenEpisode { start, extremum: Some((extremum_sample, deviation_uv)) }) => {
                    episodes.push(StEpisode {
                        lead,
                        start_sample: start,
                        extremum_sample,
                        end_sample: sample,
                        deviation_uv,
                        protocol,
                    });
                }
                Some(OpenEpisode { start, extremum: None }) => {
                    issues.push(EpisodeIssue::MissingExtremum { lead, start, end: sample });
                }
                None => issues.push(EpisodeIssue::UnmatchedEnd { lead, sample }),
            },
        }
    }
    for (lead, ep) in open {
        issues.push(EpisodeIssue::UnmatchedBegin { lead, sample: ep.start });
    }
    (episodes, issues)
}

impl StEpisode {
    /// Whether the episode meets its protocol's deviation and duration
    /// thresholds at the given sampling rate.
    pub fn satisfies_protocol(&self, sampling_rate: f64) -> bool {
        self.deviation_uv.abs() >= self.protocol.v_min_uv()
            && self.duration_secs(sampling_rate) >= self.protocol.t_min_secs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn note(sample_index: u64, aux: &str) -> AnnotationEvent {
        AnnotationEvent {
            sample_index,
            code: 22,
            subtype: 0,
            channel: 0,
            num_field: 0,
            aux: Some(aux.to_string()),
        }
    }

    #[test]
    fn parses_the_marker_table() {
        assert_eq!(parse_st_aux("(st0"), Some(StAuxMarker::Begin { lead: 0 }));
        assert_eq!(parse_st_aux("(st1"), Some(StAuxMarker::Begin { lead: 1 }));
        assert_eq!(
            parse_st_aux("ast0-183"),
            Some(StAuxMarker::Extremum { lead: 0, deviation_uv: -183.0 })
        );
        assert_eq!(
            parse_st_aux("ast1+225"),
            Some(StAuxMarker::Extremum { lead: 1, deviation_uv: 225.0 })
        );
        assert_eq!(parse_st_aux("st0)"), Some(StAuxMarker::End { lead: 0 }));
    }

    #[test]
    fn ignores_unrelated_aux() {
        for aux in ["(N", "(AFIB", "ast0", "ast0*55", "st0", "stx)", "(st", "", "noise"] {
            assert_eq!(parse_st_aux(aux), None, "aux {aux:?}");
        }
    }

    #[test]
    fn pairs_one_episode() {
        let events = [
            note(1000, "(st0"),
            note(5000, "ast0-150"),
            note(12_000, "st0)"),
        ];
        let (eps, issues) = extract_st_episodes(&events, Protocol::B);
        assert!(issues.is_empty());
        assert_eq!(
            eps,
            vec![StEpisode {
                lead: 0,
                start_sample: 1000,
                extremum_sample: 5000,
                end_sample: 12_000,
                deviation_uv: -150.0,
                protocol: Protocol::B,
            }]
        );
    }

    #[test]
    fn leads_are_independent() {
        let events = [
            note(100, "(st0"),
            note(200, "(st1"),
            note(300, "ast1+120"),
            note(400, "ast0-110"),
            note(500, "st1)"),
            note(600, "st0)"),
        ];
        let (eps, issues) = extract_st_episodes(&events, Protocol::A);
        assert!(issues.is_empty());
        assert_eq!(eps.len(), 2);
        assert_eq!((eps[0].lead, eps[0].start_sample, eps[0].end_sample), (1, 200, 500));
        assert_eq!((eps[1].lead, eps[1].start_sample, eps[1].end_sample), (0, 100, 600));
    }

    #[test]
    fn largest_magnitude_extremum_wins() {
        let events = [
            note(0, "(st0"),
            note(10, "ast0-80"),
            note(20, "ast0-210"),
            note(30, "ast0+90"),
            note(40, "st0)"),
        ];
        let (eps, _) = extract_st_episodes(&events, Protocol::B);
        assert_eq!(eps[0].deviation_uv, -210.0);
        assert_eq!(eps[0].extremum_sample, 20);
    }

    #[test]
    fn malformed_sequences_surface_as_issues() {
        let events = [
            note(10, "st0)"),       // end before any begin
            note(20, "ast1+300"),   // extremum outside an episode
            note(30, "(st0"),
            note(40, "(st0"),       // re-begin supersedes
            note(50, "ast0+120"),
            note(60, "st0)"),
            note(70, "(st1"),       // never closed
        ];
        let (eps, issues) = extract_st_episodes(&events, Protocol::B);
        assert_eq!(eps.len(), 1);
        assert_eq!(eps[0].start_sample, 40);
        assert_eq!(
            issues,
            vec![
                EpisodeIssue::UnmatchedEnd { lead: 0, sample: 10 },
                EpisodeIssue::OrphanExtremum { lead: 1, sample: 20 },
                EpisodeIssue::UnmatchedBegin { lead: 0, sample: 30 },
                EpisodeIssue::UnmatchedBegin { lead: 1, sample: 70 },
            ]
        );
    }

    #[test]
    fn end_without_extremum_emits_no_episode() {
        let events = [note(0, "(st0"), note(100, "st0)")];
        let (eps, issues) = extract_st_episodes(&events, Protocol::B);
        assert!(eps.is_empty());
        assert_eq!(
            issues,
            vec![EpisodeIssue::MissingExtremum { lead: 0, start: 0, end: 100 }]
        );
    }

    #[test]
    fn protocol_thresholds() {
        // 44 s at 250 Hz with 150 uV: passes B (>=100 uV, >=30 s).
        let ep = StEpisode {
            lead: 0,
            start_sample: 0,
            extremum_sample: 5000,
            end_sample: 11_000,
            deviation_uv: 150.0,
            protocol: Protocol::B,
        };
        assert!(ep.satisfies_protocol(250.0));
        assert!((ep.duration_secs(250.0) - 44.0).abs() < 1e-12);
        // Same timing fails C's 60 s floor.
        let c = StEpisode { protocol: Protocol::C, ..ep.clone() };
        assert!(!c.satisfies_protocol(250.0));
        // 90 uV fails B's deviation floor but passes A's 75 uV.
        let weak = StEpisode { deviation_uv: 90.0, ..ep.clone() };
        assert!(!weak.satisfies_protocol(250.0));
        let a = StEpisode { deviation_uv: 90.0, protocol: Protocol::A, ..ep };
        assert!(a.satisfies_protocol(250.0));
    }
}
