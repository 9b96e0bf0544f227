//! Standoff document ingestion and rule-based sentence segmentation.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{char_len, char_slice};

/// A labeled character span, `[char_start, char_end)` in chars.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntitySpan {
    pub label: String,
    #[serde(rename = "start")]
    pub char_start: usize,
    #[serde(rename = "end")]
    pub char_end: usize,
    pub surface: String,
}

impl EntitySpan {
    /// Builds a span over `text`, checking bounds and copying the surface.
    pub fn over(text: &str, label: impl Into<String>, start: usize, end: usize) -> Result<Self> {
        let label = label.into();
        if start >= end {
            return Err(Error::Range(format!(
                "span {label} ({start}, {end}) is empty or inverted"
            )));
        }
        let surface = char_slice(text, start, end).ok_or_else(|| {
            Error::Range(format!(
                "span {label} ({start}, {end}) exceeds text length {}",
                char_len(text)
            ))
        })?;
        Ok(EntitySpan {
            surface: surface.to_string(),
            label,
            char_start: start,
            char_end: end,
        })
    }

    /// Checks bounds and surface against `text`.
    pub fn check(&self, text: &str) -> Result<()> {
        let fresh = EntitySpan::over(text, self.label.clone(), self.char_start, self.char_end)?;
        if fresh.surface != self.surface {
            return Err(Error::Integrity(format!(
                "span {} ({}, {}) surface {:?} does not match text {:?}",
                self.label, self.char_start, self.char_end, self.surface, fresh.surface
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.char_end - self.char_start
    }

    pub fn is_empty(&self) -> bool {
        self.char_end == self.char_start
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StandoffDocument {
    pub doc_id: String,
    pub text: String,
    pub spans: Vec<EntitySpan>,
}

/// A sentence cut from a document. Spans use sentence-local offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub doc_id: String,
    pub text: String,
    pub doc_offset: usize,
    pub spans: Vec<EntitySpan>,
}

/// Parses a brat-style standoff pair.
///
/// Only text-bound annotations (ids starting with `T`) are read; relation,
/// attribute and note lines are skipped. Discontinuous annotations
/// (`Label 0 4;9 12`) become one span per fragment, and the surface column
/// is checked against the fragments joined by single spaces.
pub fn parse_standoff(doc_id: &str, text: &str, ann: &str) -> Result<StandoffDocument> {
    let mut spans = Vec::new();
    for (idx, raw) in ann.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || !line.starts_with('T') {
            continue;
        }
        let mut cols = line.splitn(3, '\t');
        let _id = cols.next();
        let (Some(body), Some(surface)) = (cols.next(), cols.next()) else {
            return Err(Error::Parse {
                line: line_no,
                message: "expected `<id>\\t<Label> <start> <end>\\t<surface>`".into(),
            });
        };
        let (label, ranges) = body.split_once(' ').ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("missing offsets in {body:?}"),
        })?;
        if label.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "empty label".into(),
            });
        }

        let mut fragments = Vec::new();
        for fragment in ranges.split(';') {
            let mut nums = fragment.split_whitespace();
            let parsed = match (nums.next(), nums.next(), nums.next()) {
                (Some(a), Some(b), None) => a.parse::<usize>().ok().zip(b.parse::<usize>().ok()),
                _ => None,
            };
            let (start, end) = parsed.ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("malformed offsets {fragment:?}"),
            })?;
            let span = EntitySpan::over(text, label, start, end).map_err(|e| match e {
                Error::Range(msg) => Error::Range(format!("line {line_no}: {msg}")),
                other => other,
            })?;
            fragments.push(span);
        }

        let joined = fragments
            .iter()
            .map(|s| s.surface.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        if joined != surface {
            return Err(Error::Integrity(format!(
                "line {line_no}: surface {surface:?} does not match text {joined:?}"
            )));
        }
        spans.extend(fragments);
    }
    Ok(StandoffDocument {
        doc_id: doc_id.to_string(),
        text: text.to_string(),
        spans,
    })
}

/// Rules for placing sentence boundaries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmenterConfig {
    /// Words (without the trailing period) after which a period never ends a sentence.
    pub abbreviations: BTreeSet<String>,
}

pub const DEFAULT_ABBREVIATIONS: [&str; 8] = ["Dr", "Mr", "Mrs", "Ms", "vs", "e.g", "i.e", "St"];

impl Default for SegmenterConfig {
    fn default() -> Self {
        SegmenterConfig {
            abbreviations: DEFAULT_ABBREVIATIONS
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

/// A candidate boundary: the sentence ends at `end`, the next begins at `next`.
#[derive(Debug, Clone, Copy)]
struct Boundary {
    end: usize,
    next: usize,
}

fn candidate_boundaries(chars: &[char], config: &SegmenterConfig) -> Vec<Boundary> {
    let n = chars.len();
    let mut out = Vec::new();
    for i in 0..n {
        let c = chars[i];
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        if i + 1 >= n || !chars[i + 1].is_whitespace() {
            continue;
        }
        let mut k = i + 1;
        while k < n && chars[k].is_whitespace() {
            k += 1;
        }
        if k >= n || !(chars[k].is_uppercase() || chars[k].is_numeric()) {
            continue;
        }
        if c == '.' {
            if i > 0 && chars[i - 1].is_numeric() {
                continue;
            }
            let mut w = i;
            while w > 0 && !chars[w - 1].is_whitespace() {
                w -= 1;
            }
            let word: String = chars[w..i]
                .iter()
                .skip_while(|ch| !ch.is_alphanumeric())
                .collect();
            if config.abbreviations.contains(&word) {
                continue;
            }
        }
        out.push(Boundary {
            end: i + 1,
            next: k,
        });
    }
    out
}

/// Splits a document into sentences.
///
/// A boundary that an entity span would cross is dropped, merging the two
/// sentences. Sentences are trimmed of surrounding whitespace unless a span
/// reaches into it.
pub fn segment_sentences(
    doc: &StandoffDocument,
    config: &SegmenterConfig,
) -> Result<Vec<Sentence>> {
    let chars: Vec<char> = doc.text.chars().collect();
    let n = chars.len();

    let cuts: Vec<usize> = candidate_boundaries(&chars, config)
        .into_iter()
        .filter(|b| {
            !doc.spans
                .iter()
                .any(|s| s.char_start < b.next && s.char_end > b.end)
        })
        .map(|b| b.end)
        .collect();

    let mut regions = Vec::with_capacity(cuts.len() + 1);
    let mut prev = 0;
    for &cut in &cuts {
        regions.push((prev, cut));
        prev = cut;
    }
    regions.push((prev, n));

    let mut assigned = vec![false; doc.spans.len()];
    let mut sentences = Vec::new();
    for (lo, hi) in regions {
        let mut start = lo;
        while start < hi && chars[start].is_whitespace() {
            start += 1;
        }
        let mut end = hi;
        while end > start && chars[end - 1].is_whitespace() {
            end -= 1;
        }
        let members: Vec<usize> = (0..doc.spans.len())
            .filter(|&i| doc.spans[i].char_start >= lo && doc.spans[i].char_start < hi)
            .collect();
        if start == end && members.is_empty() {
            continue;
        }
        for &i in &members {
            let s = &doc.spans[i];
            if s.char_end > hi {
                return Err(Error::Integrity(format!(
                    "span {} ({}, {}) crosses a sentence boundary",
                    s.label, s.char_start, s.char_end
                )));
            }
            start = start.min(s.char_start);
            end = end.max(s.char_end);
            assigned[i] = true;
        }
        let text: String = chars[start..end].iter().collect();
        let spans = members
            .iter()
            .map(|&i| {
                let s = &doc.spans[i];
                EntitySpan {
                    label: s.label.clone(),
                    char_start: s.char_start - start,
                    char_end: s.char_end - start,
                    surface: s.surface.clone(),
                }
            })
            .collect();
        sentences.push(Sentence {
            doc_id: doc.doc_id.clone(),
            text,
            doc_offset: start,
            spans,
        });
    }
    debug_assert!(assigned.iter().all(|&a| a));
    Ok(sentences)
}

/// One sentence per JSON line: `{"doc_id","doc_offset","text","spans":[{"label","start","end"}]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub doc_id: String,
    pub doc_offset: usize,
    pub text: String,
    pub spans: Vec<SpanRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanRecord {
    pub label: String,
    pub start: usize,
    pub end: usize,
}

impl From<&Sentence> for SentenceRecord {
    fn from(s: &Sentence) -> Self {
        SentenceRecord {
            doc_id: s.doc_id.clone(),
            doc_offset: s.doc_offset,
            text: s.text.clone(),
            spans: s
                .spans
                .iter()
                .map(|sp| SpanRecord {
                    label: sp.label.clone(),
                    start: sp.char_start,
                    end: sp.char_end,
                })
                .collect(),
        }
    }
}

impl TryFrom<SentenceRecord> for Sentence {
    type Error = Error;

    fn try_from(rec: SentenceRecord) -> Result<Self> {
        let spans = rec
            .spans
            .iter()
            .map(|sp| EntitySpan::over(&rec.text, sp.label.clone(), sp.start, sp.end))
            .collect::<Result<Vec<_>>>()?;
        Ok(Sentence {
            doc_id: rec.doc_id,
            text: rec.text,
            doc_offset: rec.doc_offset,
            spans,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(text: &str, spans: &[(&str, usize, usize)]) -> StandoffDocument {
        StandoffDocument {
            doc_id: "d".into(),
            text: text.into(),
            spans: spans
                .iter()
                .map(|&(l, s, e)| EntitySpan::over(text, l, s, e).unwrap())
                .collect(),
        }
    }

    #[test]
    fn parses_single_span() {
        let d = parse_standoff("d", "Take aspirin daily", "T1\tDrug 5 12\taspirin").unwrap();
        assert_eq!(
            d.spans,
            vec![EntitySpan {
                label: "Drug".into(),
                char_start: 5,
                char_end: 12,
                surface: "aspirin".into()
            }]
        );
    }

    #[test]
    fn out_of_range_offsets() {
        let err = parse_standoff("d", "Take aspirin daily", "T1\tDrug 5 99\taspirin").unwrap_err();
        assert!(matches!(err, Error::Range(_)), "{err}");
    }

    #[test]
    fn surface_mismatch_fails_document() {
        let err =
            parse_standoff("d", "Take aspirin daily", "T1\tDrug 5 12\tibuprofen").unwrap_err();
        assert!(matches!(err, Error::Integrity(_)), "{err}");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let ann = "T1\tDrug 5 12\taspirin\nT2\tDrug five 12\taspirin";
        match parse_standoff("d", "Take aspirin daily", ann).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
        match parse_standoff("d", "Take aspirin daily", "T1 Drug 5 12 aspirin").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn discontinuous_spans_split() {
        let text = "Take aspirin and then daily";
        let d =
            parse_standoff("d", text, "T1\tDrug 5 12;22 27\taspirin daily\n#1\tNote\tx").unwrap();
        assert_eq!(d.spans.len(), 2);
        assert_eq!(d.spans[1].surface, "daily");
    }

    #[test]
    fn unicode_offsets_are_chars() {
        let d = parse_standoff("d", "Nimm Präparat täglich", "T1\tDrug 5 13\tPräparat").unwrap();
        assert_eq!(d.spans[0].surface, "Präparat");
    }

    #[test]
    fn two_sentences() {
        let s =
            segment_sentences(&doc("Take aspirin. Stop now.", &[]), &Default::default()).unwrap();
        let offs: Vec<_> = s.iter().map(|x| (x.doc_offset, x.text.as_str())).collect();
        assert_eq!(offs, vec![(0, "Take aspirin."), (14, "Stop now.")]);
    }

    #[test]
    fn decimal_is_not_a_boundary() {
        let s = segment_sentences(&doc("Dose: 2.5 mg daily.", &[]), &Default::default()).unwrap();
        assert_eq!(s.len(), 1);
        let s = segment_sentences(&doc("Take 2. Then stop.", &[]), &Default::default()).unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn abbreviations_do_not_split() {
        let s = segment_sentences(
            &doc("See Dr. Smith today. Then rest.", &[]),
            &Default::default(),
        )
        .unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].text, "See Dr. Smith today.");
        let s = segment_sentences(&doc("Use e.g. Aspirin now.", &[]), &Default::default()).unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn lowercase_continuation_is_not_a_boundary() {
        let s = segment_sentences(&doc("Take it. then stop.", &[]), &Default::default()).unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn crossing_span_merges_sentences() {
        let text = "Take it daily. Stop later.";
        let d = doc(text, &[("Frequency", 8, 19)]);
        assert_eq!(d.spans[0].surface, "daily. Stop");
        let s = segment_sentences(&d, &Default::default()).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].spans[0].char_start, 8);
    }

    #[test]
    fn spans_are_reindexed_locally() {
        let text = "  Take aspirin. Stop ibuprofen now.  ";
        let d = doc(text, &[("Drug", 7, 14), ("Drug", 21, 30)]);
        let s = segment_sentences(&d, &Default::default()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].doc_offset, 2);
        assert_eq!(s[1].doc_offset, 16);
        for sent in &s {
            for sp in &sent.spans {
                assert_eq!(
                    char_slice(&sent.text, sp.char_start, sp.char_end).unwrap(),
                    sp.surface
                );
            }
        }
        assert_eq!(s[1].spans[0].char_start + s[1].doc_offset, 21);
    }

    #[test]
    fn empty_document_has_no_sentences() {
        assert!(segment_sentences(&doc("   ", &[]), &Default::default())
            .unwrap()
            .is_empty());
    }
}
