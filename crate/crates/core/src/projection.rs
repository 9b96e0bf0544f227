//! Annotation projection through alignment links, overlap resolution,
//! label filtering and seeded dataset splitting.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::align::AlignmentLinks;
use crate::corpus::Sentence;
use crate::error::{Error, Result};
use crate::tokenizer::TokenizedSentence;

/// A labeled inclusive token range with its char bounds.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledSpan {
    pub label: String,
    pub first: usize,
    pub last: usize,
    #[serde(rename = "start")]
    pub char_start: usize,
    #[serde(rename = "end")]
    pub char_end: usize,
}

impl LabeledSpan {
    pub fn token_len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn overlaps(&self, other: &LabeledSpan) -> bool {
        self.first <= other.last && other.first <= self.last
    }
}

/// A target-language sentence with token-level entity spans; one line of
/// the synthesized dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedSentence {
    pub text: String,
    pub tokens: Vec<crate::tokenizer::Token>,
    pub spans: Vec<LabeledSpan>,
}

impl AnnotatedSentence {
    pub fn unlabeled(ts: TokenizedSentence) -> Self {
        AnnotatedSentence {
            text: ts.text,
            tokens: ts.tokens,
            spans: Vec::new(),
        }
    }

    pub fn tokenized(&self) -> TokenizedSentence {
        TokenizedSentence {
            text: self.text.clone(),
            tokens: self.tokens.clone(),
        }
    }

    /// Adds a span over tokens `first..=last`, deriving its char bounds.
    pub fn push_span(&mut self, label: impl Into<String>, first: usize, last: usize) -> Result<()> {
        let ts = self.tokenized();
        let (char_start, char_end) = ts.token_span_to_char_span(first, last)?;
        self.spans.push(LabeledSpan {
            label: label.into(),
            first,
            last,
            char_start,
            char_end,
        });
        Ok(())
    }

    pub fn is_disjoint(&self) -> bool {
        let mut sorted: Vec<&LabeledSpan> = self.spans.iter().collect();
        sorted.sort_by_key(|s| (s.first, s.last));
        sorted.windows(2).all(|w| w[0].last < w[1].first)
    }

    /// Checks token bounds and char bounds of every span.
    pub fn validate(&self) -> Result<()> {
        let ts = self.tokenized();
        for s in &self.spans {
            let bounds = ts.token_span_to_char_span(s.first, s.last)?;
            if bounds != (s.char_start, s.char_end) {
                return Err(Error::Integrity(format!(
                    "span {} tokens ({}, {}) has chars ({}, {}), expected {:?}",
                    s.label, s.first, s.last, s.char_start, s.char_end, bounds
                )));
            }
        }
        Ok(())
    }
}

/// Target image of a source token span: the min-max cover of every target
/// index linked to a source index in `first..=last`. Links pointing past
/// `target_len` are ignored. `None` when nothing is linked.
pub fn project_annotation(
    links: &AlignmentLinks,
    (first, last): (usize, usize),
    target_len: usize,
) -> Option<(usize, usize)> {
    let image = links
        .iter()
        .filter(|&&(s, t)| s >= first && s <= last && t < target_len)
        .map(|&(_, t)| t);
    image.fold(None, |acc, t| match acc {
        None => Some((t, t)),
        Some((lo, hi)) => Some((lo.min(t), hi.max(t))),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelTally {
    pub projected: usize,
    /// Projected annotations whose span grew in either way below.
    pub widened: usize,
    /// Source span did not sit on token boundaries and grew to whole tokens.
    pub widened_subword: usize,
    /// Target image was non-contiguous and the cover includes gap tokens.
    pub widened_gap: usize,
    pub dropped: usize,
}

impl LabelTally {
    fn add(&mut self, other: &LabelTally) {
        self.projected += other.projected;
        self.widened += other.widened;
        self.widened_subword += other.widened_subword;
        self.widened_gap += other.widened_gap;
        self.dropped += other.dropped;
    }
}

/// Per-label projection counts, serialized as the projection report.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionReport {
    pub sentences: usize,
    pub sentences_with_spans: usize,
    pub labels: BTreeMap<String, LabelTally>,
    pub total: LabelTally,
}

impl ProjectionReport {
    pub fn merge(&mut self, other: &ProjectionReport) {
        self.sentences += other.sentences;
        self.sentences_with_spans += other.sentences_with_spans;
        for (label, tally) in &other.labels {
            self.labels.entry(label.clone()).or_default().add(tally);
        }
        self.total.add(&other.total);
    }

    fn record(&mut self, label: &str, tally: LabelTally) {
        self.labels
            .entry(label.to_string())
            .or_default()
            .add(&tally);
        self.total.add(&tally);
    }
}

/// Projects every span of `src` onto `tgt`.
///
/// Spans may overlap in the result; see [`resolve_overlaps`].
pub fn project_sentence(
    src: &Sentence,
    src_tokens: &TokenizedSentence,
    tgt: &TokenizedSentence,
    links: &AlignmentLinks,
) -> Result<(AnnotatedSentence, ProjectionReport)> {
    links.check_bounds(src_tokens.len(), tgt.len())?;
    let mut out = AnnotatedSentence::unlabeled(tgt.clone());
    let mut report = ProjectionReport {
        sentences: 1,
        ..Default::default()
    };
    for span in &src.spans {
        let mut tally = LabelTally::default();
        let Some((sf, sl)) = src_tokens.char_span_to_token_span(span.char_start, span.char_end)?
        else {
            tally.dropped = 1;
            report.record(&span.label, tally);
            continue;
        };
        let Some((tf, tl)) = project_annotation(links, (sf, sl), tgt.len()) else {
            tally.dropped = 1;
            report.record(&span.label, tally);
            continue;
        };
        tally.projected = 1;
        if src_tokens.token_span_to_char_span(sf, sl)? != (span.char_start, span.char_end) {
            tally.widened_subword = 1;
        }
        let image: BTreeSet<usize> = links
            .iter()
            .filter(|&&(s, _)| s >= sf && s <= sl)
            .map(|&(_, t)| t)
            .collect();
        if image.len() < tl - tf + 1 {
            tally.widened_gap = 1;
        }
        tally.widened = usize::from(tally.widened_subword + tally.widened_gap > 0);
        out.push_span(span.label.clone(), tf, tl)?;
        report.record(&span.label, tally);
    }
    report.sentences_with_spans = usize::from(!out.spans.is_empty());
    Ok((out, report))
}

/// Keeps the longest span (in tokens) and discards everything overlapping
/// it, repeatedly. Ties go to the earlier start, then the smaller label.
/// The result is sorted by start.
pub fn resolve_overlaps(spans: &[LabeledSpan]) -> Vec<LabeledSpan> {
    let mut order: Vec<&LabeledSpan> = spans.iter().collect();
    order.sort_by(|a, b| {
        b.token_len()
            .cmp(&a.token_len())
            .then(a.first.cmp(&b.first))
            .then(a.label.cmp(&b.label))
    });
    let mut kept: Vec<LabeledSpan> = Vec::new();
    for s in order {
        if !kept.iter().any(|k| k.overlaps(s)) {
            kept.push(s.clone());
        }
    }
    kept.sort_by_key(|s| (s.first, s.last));
    kept
}

pub const DEFAULT_DROPPED_LABELS: [&str; 3] = ["ADE", "Reason", "Route"];

pub fn default_dropped_labels() -> BTreeSet<String> {
    DEFAULT_DROPPED_LABELS
        .iter()
        .map(|s| s.to_string())
        .collect()
}

/// Removes spans with dropped labels, then (optionally) sentences left without spans.
pub fn filter_dataset(
    sentences: Vec<AnnotatedSentence>,
    dropped_labels: &BTreeSet<String>,
    drop_empty: bool,
) -> Vec<AnnotatedSentence> {
    sentences
        .into_iter()
        .map(|mut s| {
            s.spans.retain(|sp| !dropped_labels.contains(&sp.label));
            s
        })
        .filter(|s| !drop_empty || !s.spans.is_empty())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.8,
            validation: 0.1,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|r| !r.is_finite() || *r <= 0.0) {
            return Err(Error::Config(format!(
                "split ratios must be positive, got {parts:?}"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "split ratios sum to {sum}, expected 1"
            )));
        }
        Ok(())
    }

    /// `(train, validation, test)` sizes: floor for validation and test,
    /// the remainder to train.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let part = |r: f64| ((r * n as f64) + 1e-9).floor() as usize;
        let (v, t) = (part(self.validation), part(self.test));
        (n - v - t, v, t)
    }
}

impl std::str::FromStr for SplitRatios {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("split ratios {s:?}: {e}")))?;
        let [train, validation, test] = parts[..] else {
            return Err(Error::Config(format!(
                "split ratios {s:?}: expected three values"
            )));
        };
        let r = SplitRatios {
            train,
            validation,
            test,
        };
        r.validate()?;
        Ok(r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit<T> {
    pub train: Vec<T>,
    pub validation: Vec<T>,
    pub test: Vec<T>,
    pub seed: u64,
}

/// Seeded shuffle, then train/validation/test by [`SplitRatios::sizes`].
pub fn split_dataset<T>(items: Vec<T>, ratios: SplitRatios, seed: u64) -> Result<DatasetSplit<T>> {
    ratios.validate()?;
    let n = items.len();
    if n < 3 {
        return Err(Error::Precondition(format!(
            "cannot split {n} items three ways"
        )));
    }
    let (n_train, n_val, _) = ratios.sizes(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut slots: Vec<Option<T>> = items.into_iter().map(Some).collect();
    let mut take = |range: std::ops::Range<usize>| -> Vec<T> {
        order[range]
            .iter()
            .map(|&i| slots[i].take().expect("each index drawn once"))
            .collect()
    };
    let train = take(0..n_train);
    let validation = take(n_train..n_train + n_val);
    let test = take(n_train + n_val..n);
    Ok(DatasetSplit {
        train,
        validation,
        test,
        seed,
    })
}

/// Token, entity and sentence counts of one dataset part.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartStats {
    pub tokens: usize,
    pub entities: usize,
    pub sentences: usize,
}

impl PartStats {
    pub fn of(sentences: &[AnnotatedSentence]) -> Self {
        PartStats {
            tokens: sentences.iter().map(|s| s.tokens.len()).sum(),
            entities: sentences.iter().map(|s| s.spans.len()).sum(),
            sentences: sentences.len(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::EntitySpan;
    use crate::tokenizer::tokenize;

    fn span(label: &str, first: usize, last: usize) -> LabeledSpan {
        LabeledSpan {
            label: label.into(),
            first,
            last,
            char_start: 0,
            char_end: 0,
        }
    }

    fn links(pairs: &[(usize, usize)]) -> AlignmentLinks {
        pairs.iter().copied().collect()
    }

    #[test]
    fn annotation_cover() {
        let l = links(&[(0, 0), (1, 2), (2, 1)]);
        assert_eq!(project_annotation(&l, (1, 2), 3), Some((1, 2)));
        assert_eq!(project_annotation(&links(&[(0, 0)]), (1, 2), 3), None);
        let id = AlignmentLinks::identity(6);
        assert_eq!(project_annotation(&id, (2, 4), 6), Some((2, 4)));
    }

    fn src_sentence(text: &str, spans: &[(&str, usize, usize)]) -> Sentence {
        Sentence {
            doc_id: "d".into(),
            text: text.into(),
            doc_offset: 0,
            spans: spans
                .iter()
                .map(|&(l, s, e)| EntitySpan::over(text, l, s, e).unwrap())
                .collect(),
        }
    }

    #[test]
    fn one_to_one_projection() {
        let src = src_sentence("Take aspirin", &[("Drug", 5, 12)]);
        let (out, report) = project_sentence(
            &src,
            &tokenize(&src.text),
            &tokenize("Nimm Aspirin"),
            &links(&[(0, 0), (1, 1)]),
        )
        .unwrap();
        assert_eq!(
            out.spans,
            vec![LabeledSpan {
                label: "Drug".into(),
                first: 1,
                last: 1,
                char_start: 5,
                char_end: 12
            }]
        );
        assert_eq!(report.total.projected, 1);
        assert_eq!(report.total.widened, 0);
    }

    #[test]
    fn subword_span_widens() {
        let src = src_sentence("Take 100mg daily", &[("Strength", 5, 8)]);
        let (out, report) = project_sentence(
            &src,
            &tokenize(&src.text),
            &tokenize("Nimm 100mg täglich"),
            &AlignmentLinks::identity(3),
        )
        .unwrap();
        assert_eq!((out.spans[0].char_start, out.spans[0].char_end), (5, 10));
        assert_eq!(report.labels["Strength"].widened_subword, 1);
    }

    #[test]
    fn gap_is_covered() {
        let src = src_sentence("a b c d", &[("Drug", 2, 5)]);
        let (out, report) = project_sentence(
            &src,
            &tokenize(&src.text),
            &tokenize("w x y z"),
            &links(&[(1, 1), (2, 3)]),
        )
        .unwrap();
        assert_eq!((out.spans[0].first, out.spans[0].last), (1, 3));
        assert_eq!(report.total.widened_gap, 1);
    }

    #[test]
    fn unaligned_is_dropped_and_counted() {
        let src = src_sentence("Take aspirin", &[("Drug", 5, 12)]);
        let (out, report) = project_sentence(
            &src,
            &tokenize(&src.text),
            &tokenize("Nimm es"),
            &links(&[(0, 0)]),
        )
        .unwrap();
        assert!(out.spans.is_empty());
        assert_eq!(report.labels["Drug"].dropped, 1);
        assert_eq!(report.sentences_with_spans, 0);
    }

    #[test]
    fn out_of_bounds_links_rejected() {
        let src = src_sentence("Take aspirin", &[]);
        assert!(project_sentence(
            &src,
            &tokenize(&src.text),
            &tokenize("Nimm"),
            &links(&[(1, 1)])
        )
        .is_err());
    }

    #[test]
    fn longest_span_wins() {
        let kept = resolve_overlaps(&[span("Dosage", 0, 2), span("Drug", 0, 4)]);
        assert_eq!(kept, vec![span("Drug", 0, 4)]);
    }

    #[test]
    fn disjoint_spans_sorted() {
        let kept = resolve_overlaps(&[span("B", 5, 6), span("A", 0, 1)]);
        assert_eq!(kept, vec![span("A", 0, 1), span("B", 5, 6)]);
    }

    #[test]
    fn tie_break_by_start_then_label() {
        assert_eq!(
            resolve_overlaps(&[span("B", 1, 2), span("A", 0, 1)]),
            vec![span("A", 0, 1)]
        );
        assert_eq!(
            resolve_overlaps(&[span("B", 0, 1), span("A", 0, 1)]),
            vec![span("A", 0, 1)]
        );
    }

    fn sentence_with(labels: &[&str]) -> AnnotatedSentence {
        let mut s = AnnotatedSentence::unlabeled(tokenize("a b c d e"));
        for (i, l) in labels.iter().enumerate() {
            s.push_span(*l, i, i).unwrap();
        }
        s
    }

    #[test]
    fn filters_labels_then_empties() {
        let out = filter_dataset(
            vec![sentence_with(&["ADE"])],
            &default_dropped_labels(),
            true,
        );
        assert!(out.is_empty());
        let out = filter_dataset(
            vec![sentence_with(&["Drug", "Route"])],
            &default_dropped_labels(),
            true,
        );
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].spans.len(), 1);
        assert_eq!(out[0].spans[0].label, "Drug");
        let input = vec![sentence_with(&["ADE"]), sentence_with(&[])];
        assert_eq!(
            filter_dataset(input.clone(), &BTreeSet::new(), false),
            input
        );
    }

    #[test]
    fn split_sizes() {
        let r = SplitRatios::default();
        assert_eq!(r.sizes(16632), (13306, 1663, 1663));
        assert_eq!(r.sizes(10), (8, 1, 1));
        let s = split_dataset((0..10).collect::<Vec<_>>(), r, 3).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (8, 1, 1));
        let mut all: Vec<_> = s
            .train
            .iter()
            .chain(&s.validation)
            .chain(&s.test)
            .copied()
            .collect();
        all.sort();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(split_dataset((0..10).collect::<Vec<_>>(), r, 3).unwrap(), s);
    }

    #[test]
    fn split_preconditions() {
        assert!(split_dataset(vec![1, 2], SplitRatios::default(), 0).is_err());
        assert!("0.8,0.1,0.05".parse::<SplitRatios>().is_err());
        assert!("0.8,0.2".parse::<SplitRatios>().is_err());
        assert!("0.9,0.1,0".parse::<SplitRatios>().is_err());
        assert_eq!(
            "0.8, 0.1, 0.1".parse::<SplitRatios>().unwrap(),
            SplitRatios::default()
        );
    }
}
