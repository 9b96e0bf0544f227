//! Token- and character-level precision, recall and F1 with support-weighted
//! totals, label mapping for external gold data, and report rendering.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projection::AnnotatedSentence;
use crate::text::char_len;
use crate::tokenizer::{Token, TokenizedSentence, Tokenizer};

/// The label of tokens and characters outside every entity.
pub const OUTSIDE: &str = "O";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub label: String,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ClassScore {
    pub fn from_counts(label: impl Into<String>, tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ClassScore {
            label: label.into(),
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1,
        }
    }

    /// Gold occurrences of the class.
    pub fn support(&self) -> usize {
        self.tp + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedTotal {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub per_class: Vec<ClassScore>,
    /// Mean over classes with gold support, weighted by that support.
    pub total: WeightedTotal,
    pub support: BTreeMap<String, usize>,
}

impl EvaluationReport {
    pub fn class(&self, label: &str) -> Option<&ClassScore> {
        self.per_class.iter().find(|c| c.label == label)
    }

    fn from_counts(counts: BTreeMap<String, [usize; 3]>) -> Self {
        let per_class: Vec<ClassScore> = counts
            .into_iter()
            .map(|(l, [tp, fp, fn_])| ClassScore::from_counts(l, tp, fp, fn_))
            .collect();
        let support: BTreeMap<String, usize> = per_class
            .iter()
            .map(|c| (c.label.clone(), c.support()))
            .collect();
        let weight: usize = support.values().sum();
        let weighted = |f: fn(&ClassScore) -> f64| {
            if weight == 0 {
                return 0.0;
            }
            per_class
                .iter()
                .map(|c| c.support() as f64 * f(c))
                .sum::<f64>()
                / weight as f64
        };
        let total = WeightedTotal {
            precision: weighted(|c| c.precision),
            recall: weighted(|c| c.recall),
            f1: weighted(|c| c.f1),
        };
        EvaluationReport {
            per_class,
            total,
            support,
        }
    }
}

fn class_set<'a>(
    gold: impl Iterator<Item = &'a str>,
    pred: impl Iterator<Item = &'a str>,
) -> BTreeSet<String> {
    gold.chain(pred)
        .filter(|l| *l != OUTSIDE)
        .map(str::to_string)
        .collect()
}

fn count_into(counts: &mut BTreeMap<String, [usize; 3]>, gold: &str, pred: &str) {
    if gold == pred {
        if let Some(c) = counts.get_mut(gold) {
            c[0] += 1;
        }
        return;
    }
    if let Some(c) = counts.get_mut(pred) {
        c[1] += 1;
    }
    if let Some(c) = counts.get_mut(gold) {
        c[2] += 1;
    }
}

/// Scores per-token label sequences. `classes` restricts the scored labels;
/// by default every non-`O` label seen in either side is scored.
pub fn token_metrics<S: AsRef<str>>(
    gold: &[Vec<S>],
    pred: &[Vec<S>],
    classes: Option<&BTreeSet<String>>,
) -> Result<EvaluationReport> {
    if gold.len() != pred.len() {
        return Err(Error::Shape {
            sentence: gold.len().min(pred.len()),
            message: format!("{} gold sentences but {} predicted", gold.len(), pred.len()),
        });
    }
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.len() != p.len() {
            return Err(Error::Shape {
                sentence: i,
                message: format!("{} gold labels but {} predicted", g.len(), p.len()),
            });
        }
    }
    let classes = match classes {
        Some(c) => c.iter().filter(|l| *l != OUTSIDE).cloned().collect(),
        None => class_set(
            gold.iter().flatten().map(AsRef::as_ref),
            pred.iter().flatten().map(AsRef::as_ref),
        ),
    };
    let mut counts: BTreeMap<String, [usize; 3]> =
        classes.into_iter().map(|c| (c, [0; 3])).collect();
    for (g, p) in gold.iter().zip(pred) {
        for (a, b) in g.iter().zip(p) {
            count_into(&mut counts, a.as_ref(), b.as_ref());
        }
    }
    Ok(EvaluationReport::from_counts(counts))
}

/// A labeled half-open character range.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CharSpan {
    pub label: String,
    pub start: usize,
    pub end: usize,
}

/// A sentence prepared for scoring: its text, tokens and character spans.
/// `token_aligned` is false when some span does not fall on token
/// boundaries, in which case only character-level scores are defined.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSentence {
    pub text: String,
    pub tokens: Vec<Token>,
    pub spans: Vec<CharSpan>,
    pub token_aligned: bool,
}

impl From<&AnnotatedSentence> for EvalSentence {
    fn from(s: &AnnotatedSentence) -> Self {
        EvalSentence {
            text: s.text.clone(),
            tokens: s.tokens.clone(),
            spans: s
                .spans
                .iter()
                .map(|sp| CharSpan {
                    label: sp.label.clone(),
                    start: sp.char_start,
                    end: sp.char_end,
                })
                .collect(),
            token_aligned: true,
        }
    }
}

#[derive(Deserialize)]
struct LooseRecord {
    text: String,
    #[serde(default)]
    tokens: Option<Vec<Token>>,
    #[serde(default)]
    spans: Vec<CharSpan>,
}

fn on_token_boundaries(ts: &TokenizedSentence, s: &CharSpan) -> bool {
    match ts.char_span_to_token_span(s.start, s.end) {
        Ok(Some((first, last))) => {
            ts.token_span_to_char_span(first, last).ok() == Some((s.start, s.end))
        }
        _ => false,
    }
}

impl EvalSentence {
    /// Builds a sentence from text and character spans, tokenizing the text.
    pub fn from_char_spans(
        text: String,
        spans: Vec<CharSpan>,
        tokenizer: &Tokenizer,
    ) -> Result<Self> {
        let ts = tokenizer.tokenize(&text);
        let len = char_len(&text);
        let mut token_aligned = true;
        for s in &spans {
            if s.start >= s.end || s.end > len {
                return Err(Error::Range(format!(
                    "span {} ({}, {}) outside a {len}-char text",
                    s.label, s.start, s.end
                )));
            }
            token_aligned &= on_token_boundaries(&ts, s);
        }
        Ok(EvalSentence {
            text: ts.text,
            tokens: ts.tokens,
            spans,
            token_aligned,
        })
    }

    /// Parses one JSONL record: either a dataset record (text, tokens,
    /// spans) or an external record with only text and character spans.
    /// Records without tokens are tokenized here.
    pub fn parse_record(line: &str, tokenizer: &Tokenizer) -> Result<Self> {
        let rec: LooseRecord =
            serde_json::from_str(line).map_err(|e| Error::json("parsing evaluation record", e))?;
        match rec.tokens {
            None => Self::from_char_spans(rec.text, rec.spans, tokenizer),
            Some(tokens) => {
                let ts = TokenizedSentence {
                    text: rec.text,
                    tokens,
                };
                let token_aligned = rec.spans.iter().all(|s| on_token_boundaries(&ts, s));
                Ok(EvalSentence {
                    text: ts.text,
                    tokens: ts.tokens,
                    spans: rec.spans,
                    token_aligned,
                })
            }
        }
    }

    /// One label per character, `O` outside spans.
    pub fn char_labels(&self) -> Result<Vec<String>> {
        let n = char_len(&self.text);
        let mut labels = vec![OUTSIDE.to_string(); n];
        let mut taken = vec![false; n];
        for s in &self.spans {
            if s.start >= s.end || s.end > n {
                return Err(Error::Range(format!(
                    "span {} ({}, {}) outside a {n}-char text",
                    s.label, s.start, s.end
                )));
            }
            for c in s.start..s.end {
                if taken[c] {
                    return Err(Error::Precondition(format!(
                        "spans overlap at character {c}"
                    )));
                }
                taken[c] = true;
                labels[c] = s.label.clone();
            }
        }
        Ok(labels)
    }

    /// One label per token, or `None` when spans miss token boundaries.
    pub fn token_labels(&self) -> Result<Option<Vec<String>>> {
        if !self.token_aligned {
            return Ok(None);
        }
        let mut labels = vec![OUTSIDE.to_string(); self.tokens.len()];
        let mut taken = vec![false; self.tokens.len()];
        for s in &self.spans {
            for (i, t) in self.tokens.iter().enumerate() {
                if t.char_start >= s.start && t.char_end <= s.end {
                    if taken[i] {
                        return Err(Error::Precondition(format!("spans overlap at token {i}")));
                    }
                    taken[i] = true;
                    labels[i] = s.label.clone();
                }
            }
        }
        Ok(Some(labels))
    }
}

/// Per-token entity labels of a sentence, `O` outside spans.
pub fn token_labels(sentence: &AnnotatedSentence) -> Result<Vec<String>> {
    let mut labels = vec![OUTSIDE.to_string(); sentence.tokens.len()];
    let mut taken = vec![false; sentence.tokens.len()];
    for s in &sentence.spans {
        if s.first > s.last || s.last >= labels.len() {
            return Err(Error::Precondition(format!(
                "span {} ({}, {}) outside {} tokens",
                s.label,
                s.first,
                s.last,
                labels.len()
            )));
        }
        for t in s.first..=s.last {
            if taken[t] {
                return Err(Error::Precondition(format!("spans overlap at token {t}")));
            }
            taken[t] = true;
            labels[t] = s.label.clone();
        }
    }
    Ok(labels)
}

/// Scores character labels of sentence pairs with identical texts.
pub fn char_metrics(
    gold: &[EvalSentence],
    pred: &[EvalSentence],
    classes: Option<&BTreeSet<String>>,
) -> Result<EvaluationReport> {
    if gold.len() != pred.len() {
        return Err(Error::Shape {
            sentence: gold.len().min(pred.len()),
            message: format!("{} gold sentences but {} predicted", gold.len(), pred.len()),
        });
    }
    let mut g_labels = Vec::with_capacity(gold.len());
    let mut p_labels = Vec::with_capacity(pred.len());
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.text != p.text {
            return Err(Error::Integrity(format!(
                "sentence {i}: gold and predicted texts differ"
            )));
        }
        g_labels.push(g.char_labels()?);
        p_labels.push(p.char_labels()?);
    }
    token_metrics(&g_labels, &p_labels, classes)
}

/// Token-level scores over sentence pairs, or `None` when some gold
/// sentence has spans off token boundaries.
pub fn token_metrics_of(
    gold: &[EvalSentence],
    pred: &[EvalSentence],
    classes: Option<&BTreeSet<String>>,
) -> Result<Option<EvaluationReport>> {
    let mut g_labels = Vec::with_capacity(gold.len());
    let mut p_labels = Vec::with_capacity(pred.len());
    for (g, p) in gold.iter().zip(pred) {
        match (g.token_labels()?, p.token_labels()?) {
            (Some(a), Some(b)) => {
                g_labels.push(a);
                p_labels.push(b);
            }
            _ => return Ok(None),
        }
    }
    if gold.len() != pred.len() {
        return Err(Error::Shape {
            sentence: gold.len().min(pred.len()),
            message: format!("{} gold sentences but {} predicted", gold.len(), pred.len()),
        });
    }
    token_metrics(&g_labels, &p_labels, classes).map(Some)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Token,
    Char,
    Both,
}

impl std::str::FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "token" => Ok(Level::Token),
            "char" => Ok(Level::Char),
            "both" => Ok(Level::Both),
            other => Err(Error::Config(format!(
                "level must be token, char or both, not {other:?}"
            ))),
        }
    }
}

/// Scores at one or both levels. A requested token level that is not
/// defined for the gold data is reported as null.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub token: Option<Option<EvaluationReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub char: Option<EvaluationReport>,
}

pub fn evaluate(
    gold: &[EvalSentence],
    pred: &[EvalSentence],
    level: Level,
    classes: Option<&BTreeSet<String>>,
) -> Result<Evaluation> {
    let token = match level {
        Level::Token | Level::Both => Some(token_metrics_of(gold, pred, classes)?),
        Level::Char => None,
    };
    let char = match level {
        Level::Char | Level::Both => Some(char_metrics(gold, pred, classes)?),
        Level::Token => None,
    };
    Ok(Evaluation { token, char })
}

impl Evaluation {
    /// A plain-text table: one Pr/Re/F1 row triple per level, one column per
    /// class plus the weighted total.
    pub fn to_table(&self) -> String {
        let mut labels = BTreeSet::new();
        let rows: Vec<(&str, Option<&EvaluationReport>)> = [
            self.token.as_ref().map(|r| ("token", r.as_ref())),
            self.char.as_ref().map(|r| ("char", Some(r))),
        ]
        .into_iter()
        .flatten()
        .collect();
        for (_, r) in &rows {
            if let Some(r) = r {
                labels.extend(r.per_class.iter().map(|c| c.label.clone()));
            }
        }
        let width = labels.iter().map(|l| l.len()).max().unwrap_or(0).max(6);
        let mut out = String::new();
        let _ = write!(out, "{:<6} {:<3}", "level", "");
        for l in &labels {
            let _ = write!(out, " {l:>width$}");
        }
        let _ = writeln!(out, " {:>width$}", "Total");
        for (name, report) in rows {
            for (metric, pick) in [
                (
                    "Pr",
                    (|c: &ClassScore| c.precision) as fn(&ClassScore) -> f64,
                ),
                ("Re", |c: &ClassScore| c.recall),
                ("F1", |c: &ClassScore| c.f1),
            ] {
                let _ = write!(out, "{name:<6} {metric:<3}");
                for l in &labels {
                    let cell = report
                        .and_then(|r| r.class(l))
                        .map_or("n/a".to_string(), |c| format!("{:.3}", pick(c)));
                    let _ = write!(out, " {cell:>width$}");
                }
                let total = report.map_or("n/a".to_string(), |r| {
                    let t = &r.total;
                    let v = match metric {
                        "Pr" => t.precision,
                        "Re" => t.recall,
                        _ => t.f1,
                    };
                    format!("{v:.3}")
                });
                let _ = writeln!(out, " {total:>width$}");
            }
        }
        out
    }
}

/// External label to internal label, or `None` to discard.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMap {
    pub mapping: BTreeMap<String, Option<String>>,
}

impl LabelMap {
    /// Parses `external=internal` lines; `external=` discards the label.
    /// Blank lines and `#` comments are ignored.
    pub fn parse(content: &str) -> Result<Self> {
        let mut mapping = BTreeMap::new();
        for (i, raw) in content.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (ext, int) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: "expected external=internal".into(),
            })?;
            let (ext, int) = (ext.trim(), int.trim());
            if ext.is_empty() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: "empty external label".into(),
                });
            }
            let target = (!int.is_empty()).then(|| int.to_string());
            if mapping.insert(ext.to_string(), target).is_some() {
                return Err(Error::Config(format!(
                    "label map line {}: duplicate label {ext:?}",
                    i + 1
                )));
            }
        }
        Ok(LabelMap { mapping })
    }

    /// Internal labels that some external label maps to.
    pub fn targets(&self) -> BTreeSet<String> {
        self.mapping.values().flatten().cloned().collect()
    }
}

/// Relabels spans through `map`, removing discarded ones. Sentences left
/// without spans are kept. Labels missing from the map are an error.
pub fn map_labels(sentences: Vec<EvalSentence>, map: &LabelMap) -> Result<Vec<EvalSentence>> {
    let missing: BTreeSet<&str> = sentences
        .iter()
        .flat_map(|s| s.spans.iter())
        .map(|sp| sp.label.as_str())
        .filter(|l| !map.mapping.contains_key(*l))
        .collect();
    if !missing.is_empty() {
        let list: Vec<&str> = missing.into_iter().collect();
        return Err(Error::Config(format!(
            "label map has no entry for: {}",
            list.join(", ")
        )));
    }
    Ok(sentences
        .into_iter()
        .map(|mut s| {
            s.spans = std::mem::take(&mut s.spans)
                .into_iter()
                .filter_map(|mut sp| {
                    let target = map.mapping[&sp.label].clone()?;
                    sp.label = target;
                    Some(sp)
                })
                .collect();
            s
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::tokenize;
    use proptest::prelude::*;

    fn seqs(v: &[&[&str]]) -> Vec<Vec<String>> {
        v.iter()
            .map(|s| s.iter().map(|x| x.to_string()).collect())
            .collect()
    }

    fn brute(gold: &[Vec<String>], pred: &[Vec<String>], class: &str) -> (usize, usize, usize) {
        let g: Vec<&String> = gold.iter().flatten().collect();
        let p: Vec<&String> = pred.iter().flatten().collect();
        let mut tp = 0;
        let mut fp = 0;
        let mut fn_ = 0;
        for i in 0..g.len() {
            let (gc, pc) = (g[i] == class, p[i] == class);
            tp += (gc && pc) as usize;
            fp += (!gc && pc) as usize;
            fn_ += (gc && !pc) as usize;
        }
        (tp, fp, fn_)
    }

    #[test]
    fn worked_example() {
        let gold = seqs(&[&["Drug", "O", "O", "Dosage"]]);
        let pred = seqs(&[&["Drug", "Drug", "O", "Dosage"]]);
        let r = token_metrics(&gold, &pred, None).unwrap();
        let drug = r.class("Drug").unwrap();
        assert_eq!((drug.precision, drug.recall), (0.5, 1.0));
        assert!((drug.f1 - 2.0 / 3.0).abs() < 1e-12);
        let dose = r.class("Dosage").unwrap();
        assert_eq!((dose.precision, dose.recall, dose.f1), (1.0, 1.0, 1.0));
        assert!((r.total.f1 - 5.0 / 6.0).abs() < 1e-12);
        assert!(r.class(OUTSIDE).is_none());
    }

    #[test]
    fn identity_scores_one() {
        let gold = seqs(&[&["A", "O", "B"], &["B", "B"]]);
        let r = token_metrics(&gold, &gold, None).unwrap();
        assert!(r.per_class.iter().all(|c| c.f1 == 1.0));
        assert_eq!(r.total.f1, 1.0);
    }

    #[test]
    fn unsupported_classes_leave_the_total() {
        let classes: BTreeSet<String> = ["A", "Z"].iter().map(|s| s.to_string()).collect();
        let gold = seqs(&[&["A", "O"]]);
        let pred = seqs(&[&["A", "O"]]);
        let r = token_metrics(&gold, &pred, Some(&classes)).unwrap();
        assert_eq!(r.support["Z"], 0);
        assert_eq!(r.total.f1, 1.0);
    }

    #[test]
    fn length_mismatch_names_the_sentence() {
        let gold = seqs(&[&["A"], &["A", "O"]]);
        let pred = seqs(&[&["A"], &["A"]]);
        let err = token_metrics(&gold, &pred, None).unwrap_err();
        assert!(matches!(err, Error::Shape { sentence: 1, .. }));
    }

    fn sentence(text: &str, spans: &[(&str, usize, usize)]) -> EvalSentence {
        let spans = spans
            .iter()
            .map(|&(l, s, e)| CharSpan {
                label: l.into(),
                start: s,
                end: e,
            })
            .collect();
        EvalSentence::from_char_spans(text.into(), spans, &Tokenizer::default()).unwrap()
    }

    #[test]
    fn char_example() {
        let g = sentence("abcdefghij", &[("Drug", 0, 7)]);
        let p = sentence("abcdefghij", &[("Drug", 0, 5)]);
        let r = char_metrics(&[g], &[p], None).unwrap();
        let d = r.class("Drug").unwrap();
        assert_eq!((d.tp, d.fp, d.fn_), (5, 0, 2));
        assert_eq!(d.precision, 1.0);
        assert!((d.recall - 5.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_char_spans_score_zero() {
        let g = sentence("aaaa bbbb", &[("X", 0, 4)]);
        let p = sentence("aaaa bbbb", &[("X", 5, 9)]);
        let r = char_metrics(&[g], &[p], None).unwrap();
        let x = r.class("X").unwrap();
        assert_eq!((x.precision, x.recall), (0.0, 0.0));
    }

    #[test]
    fn char_text_mismatch_is_integrity() {
        let g = sentence("abc", &[]);
        let p = sentence("abd", &[]);
        assert!(matches!(
            char_metrics(&[g], &[p], None),
            Err(Error::Integrity(_))
        ));
    }

    #[test]
    fn token_labels_examples() {
        let mut s = AnnotatedSentence::unlabeled(tokenize("a b c d"));
        assert_eq!(token_labels(&s).unwrap(), ["O"; 4]);
        s.push_span("Drug", 1, 3).unwrap();
        assert_eq!(token_labels(&s).unwrap(), ["O", "Drug", "Drug", "Drug"]);
        let mut s = AnnotatedSentence::unlabeled(tokenize("a b c"));
        s.push_span("A", 0, 0).unwrap();
        s.push_span("B", 2, 2).unwrap();
        assert_eq!(token_labels(&s).unwrap(), ["A", "O", "B"]);
    }

    #[test]
    fn unaligned_gold_has_no_token_scores() {
        let g = sentence("aspirin100 mg", &[("Drug", 0, 7)]);
        assert!(!g.token_aligned);
        let p = sentence("aspirin100 mg", &[]);
        let e = evaluate(&[g], &[p], Level::Both, None).unwrap();
        assert_eq!(e.token, Some(None));
        assert!(e.char.is_some());
        assert!(e.to_table().contains("n/a"));
        let json = serde_json::to_string(&e).unwrap();
        assert!(json.contains("\"token\":null"));
    }

    #[test]
    fn parses_external_and_dataset_records() {
        let tk = Tokenizer::default();
        let ext = EvalSentence::parse_record(
            r#"{"text":"Gabe Aspirin.","spans":[{"label":"CHEM","start":5,"end":12}]}"#,
            &tk,
        )
        .unwrap();
        assert_eq!(ext.tokens.len(), 3);
        assert!(ext.token_aligned);
        assert_eq!(ext.token_labels().unwrap().unwrap(), ["O", "CHEM", "O"]);
        let mut s = AnnotatedSentence::unlabeled(tokenize("Gabe Aspirin ."));
        s.push_span("Drug", 1, 1).unwrap();
        let line = serde_json::to_string(&s).unwrap();
        let back = EvalSentence::parse_record(&line, &tk).unwrap();
        assert_eq!(back, EvalSentence::from(&s));
    }

    #[test]
    fn label_map() {
        let map = LabelMap::parse("# table\nCHEM=Drug\nDISEASE=\n\n").unwrap();
        assert_eq!(map.targets().into_iter().collect::<Vec<_>>(), ["Drug"]);
        let s = sentence("aspirin for flu", &[("CHEM", 0, 7), ("DISEASE", 12, 15)]);
        let out = map_labels(vec![s.clone()], &map).unwrap();
        assert_eq!(out[0].spans.len(), 1);
        assert_eq!(out[0].spans[0].label, "Drug");

        let drop_all = LabelMap::parse("CHEM=\nDISEASE=").unwrap();
        let out = map_labels(vec![s.clone()], &drop_all).unwrap();
        assert_eq!(out.len(), 1);
        assert!(out[0].spans.is_empty());

        let identity = LabelMap::parse("CHEM=CHEM\nDISEASE=DISEASE").unwrap();
        assert_eq!(
            map_labels(vec![s.clone()], &identity).unwrap(),
            vec![s.clone()]
        );

        let partial = LabelMap::parse("CHEM=Drug").unwrap();
        let err = map_labels(vec![s], &partial).unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("DISEASE")));
        assert!(LabelMap::parse("A=B\nA=C").is_err());
        assert!(LabelMap::parse("nonsense").is_err());
    }

    fn label_seqs() -> impl Strategy<Value = (Vec<Vec<String>>, Vec<Vec<String>>)> {
        let label = prop::sample::select(vec!["O", "O", "A", "B", "C"]);
        prop::collection::vec(prop::collection::vec((label.clone(), label), 0..8), 1..6).prop_map(
            |sents| {
                let gold = sents
                    .iter()
                    .map(|s| s.iter().map(|(g, _)| g.to_string()).collect())
                    .collect();
                let pred = sents
                    .iter()
                    .map(|s| s.iter().map(|(_, p)| p.to_string()).collect())
                    .collect();
                (gold, pred)
            },
        )
    }

    proptest! {
        #[test]
        fn matches_brute_force((gold, pred) in label_seqs()) {
            let r = token_metrics(&gold, &pred, None).unwrap();
            for c in &r.per_class {
                prop_assert_eq!((c.tp, c.fp, c.fn_), brute(&gold, &pred, &c.label));
                prop_assert!((0.0..=1.0).contains(&c.f1));
                prop_assert!(c.f1 <= c.precision.max(c.recall) + 1e-12);
                if c.precision > 0.0 && c.recall > 0.0 {
                    let h = 2.0 * c.precision * c.recall / (c.precision + c.recall);
                    prop_assert!((c.f1 - h).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn swap_exchanges_precision_and_recall((gold, pred) in label_seqs()) {
            let a = token_metrics(&gold, &pred, None).unwrap();
            let b = token_metrics(&pred, &gold, None).unwrap();
            for (x, y) in a.per_class.iter().zip(&b.per_class) {
                prop_assert_eq!(x.tp, y.tp);
                prop_assert_eq!(x.precision, y.recall);
                prop_assert_eq!(x.recall, y.precision);
            }
        }

        #[test]
        fn sentence_order_is_irrelevant((gold, pred) in label_seqs()) {
            let a = token_metrics(&gold, &pred, None).unwrap();
            let mut g = gold.clone();
            let mut p = pred.clone();
            g.reverse();
            p.reverse();
            let b = token_metrics(&g, &p, None).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
