//! Deterministic replacement of de-identification placeholders.

use std::collections::BTreeMap;
use std::fmt;

use regex::Regex;

use crate::corpus::Sentence;
use crate::error::{Error, Result};
use crate::hash::{fnv1a_seeded, splitmix64};
use crate::text::{boundary_table, byte_to_char, char_len};

pub const DEFAULT_PLACEHOLDER_PATTERN: &str = r"\[\*\*[^\]]*?\*\*\]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PlaceholderKind {
    PersonName,
    Date,
    Address,
    IdNumber,
    Other,
}

impl PlaceholderKind {
    pub const ALL: [PlaceholderKind; 5] = [
        PlaceholderKind::PersonName,
        PlaceholderKind::Date,
        PlaceholderKind::Address,
        PlaceholderKind::IdNumber,
        PlaceholderKind::Other,
    ];

    /// Infers the kind from the placeholder's inner words. Anything
    /// unrecognised falls back to `Other`.
    pub fn infer(placeholder: &str) -> Self {
        let lower = placeholder.to_lowercase();
        let words: Vec<&str> = lower
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .collect();
        let has = |keys: &[&str]| words.iter().any(|w| keys.contains(w));
        if has(&["name", "firstname", "lastname", "surname"]) {
            return PlaceholderKind::PersonName;
        }
        if has(&["date", "year", "month", "day"])
            || (!words.is_empty() && words.iter().all(|w| w.chars().all(|c| c.is_ascii_digit())))
        {
            return PlaceholderKind::Date;
        }
        if has(&[
            "address", "street", "location", "city", "state", "zip", "hospital",
        ]) {
            return PlaceholderKind::Address;
        }
        if has(&["number", "id", "phone", "mrn", "telephone", "fax"]) {
            return PlaceholderKind::IdNumber;
        }
        PlaceholderKind::Other
    }

    fn tag(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for PlaceholderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlaceholderKind::PersonName => "person-name",
            PlaceholderKind::Date => "date",
            PlaceholderKind::Address => "address",
            PlaceholderKind::IdNumber => "id-number",
            PlaceholderKind::Other => "other",
        })
    }
}

fn default_pool(kind: PlaceholderKind) -> &'static [&'static str] {
    match kind {
        PlaceholderKind::PersonName => &[
            "Jane Doe",
            "John Miller",
            "Anna Schmidt",
            "Peter Weber",
            "Maria Fischer",
            "Thomas Wagner",
            "Laura Becker",
            "Michael Hoffmann",
            "Sarah Koch",
            "David Richter",
        ],
        PlaceholderKind::Date => &[
            "2019-03-14",
            "2020-11-02",
            "2018-07-21",
            "2021-01-30",
            "2017-05-09",
            "2022-09-17",
            "2016-12-05",
            "2023-02-28",
        ],
        PlaceholderKind::Address => &[
            "12 Elm Street",
            "4 Lindenweg",
            "77 Harbor Road",
            "9 Bahnhofstrasse",
            "31 Maple Avenue",
            "18 Gartenstrasse",
        ],
        PlaceholderKind::IdNumber => &[
            "4711-2231",
            "8830-1174",
            "1029-5567",
            "6612-0043",
            "3398-7710",
            "5521-8846",
        ],
        PlaceholderKind::Other => &["Sample", "Example", "Placeholder", "Unknown"],
    }
}

/// Seeded generator for placeholder replacements.
///
/// The replacement for a placeholder is a pure function of its kind, the
/// seed, and its 0-based ordinal among the placeholders of the sentence.
#[derive(Debug, Clone)]
pub struct SyntheticValueSpec {
    pub pattern: Regex,
    pub seed: u64,
    pub pools: BTreeMap<PlaceholderKind, Vec<String>>,
}

impl SyntheticValueSpec {
    pub fn new(seed: u64) -> Self {
        let pools = PlaceholderKind::ALL
            .iter()
            .map(|&k| (k, default_pool(k).iter().map(|s| s.to_string()).collect()))
            .collect();
        SyntheticValueSpec {
            pattern: Regex::new(DEFAULT_PLACEHOLDER_PATTERN).expect("default pattern compiles"),
            seed,
            pools,
        }
    }

    pub fn with_pattern(mut self, pattern: &str) -> Result<Self> {
        self.pattern =
            Regex::new(pattern).map_err(|e| Error::Config(format!("placeholder pattern: {e}")))?;
        Ok(self)
    }

    /// Derives a per-sentence spec so that sentences of a corpus draw
    /// different values while staying reproducible.
    pub fn for_sentence(&self, doc_id: &str, doc_offset: usize) -> Self {
        let mut spec = self.clone();
        let mut bytes = doc_id.as_bytes().to_vec();
        bytes.extend_from_slice(&(doc_offset as u64).to_le_bytes());
        spec.seed = fnv1a_seeded(self.seed, &bytes);
        spec
    }

    pub fn value(&self, kind: PlaceholderKind, ordinal: usize) -> &str {
        let pool = self.pools.get(&kind).filter(|p| !p.is_empty()).or_else(|| {
            self.pools
                .get(&PlaceholderKind::Other)
                .filter(|p| !p.is_empty())
        });
        match pool {
            Some(pool) => {
                let h = splitmix64(self.seed ^ splitmix64((ordinal as u64) << 8 | kind.tag()));
                &pool[(h % pool.len() as u64) as usize]
            }
            None => "",
        }
    }
}

/// Replaces each placeholder in the sentence with a synthetic value and
/// shifts every span that starts after it by the length change.
pub fn synthesize_placeholders(s: &Sentence, spec: &SyntheticValueSpec) -> Result<Sentence> {
    let table = boundary_table(&s.text);
    let mut out = String::with_capacity(s.text.len());
    let mut spans = s.spans.clone();
    let mut last_byte = 0;
    let mut delta: isize = 0;
    let mut found = false;

    for (ordinal, m) in spec.pattern.find_iter(&s.text).enumerate() {
        if m.as_str().is_empty() {
            continue;
        }
        found = true;
        let start = byte_to_char(&table, m.start());
        let end = byte_to_char(&table, m.end());
        if let Some(hit) = s
            .spans
            .iter()
            .find(|sp| sp.char_start < end && sp.char_end > start)
        {
            return Err(Error::Integrity(format!(
                "placeholder {:?} at ({start}, {end}) overlaps span {} ({}, {})",
                m.as_str(),
                hit.label,
                hit.char_start,
                hit.char_end
            )));
        }
        let replacement = spec.value(PlaceholderKind::infer(m.as_str()), ordinal);
        let step = char_len(replacement) as isize - (end - start) as isize;
        for (new, old) in spans.iter_mut().zip(&s.spans) {
            if old.char_start >= end {
                new.char_start = (new.char_start as isize + step) as usize;
                new.char_end = (new.char_end as isize + step) as usize;
            }
        }
        delta += step;
        out.push_str(&s.text[last_byte..m.start()]);
        out.push_str(replacement);
        last_byte = m.end();
    }
    if !found {
        return Ok(s.clone());
    }
    out.push_str(&s.text[last_byte..]);
    log::trace!("synthesized sentence at {} (delta {delta})", s.doc_offset);
    Ok(Sentence {
        doc_id: s.doc_id.clone(),
        text: out,
        doc_offset: s.doc_offset,
        spans,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::EntitySpan;

    fn sentence(text: &str, spans: &[(&str, usize, usize)]) -> Sentence {
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

    fn fixed_spec(value: &str) -> SyntheticValueSpec {
        let mut spec = SyntheticValueSpec::new(7);
        for pool in spec.pools.values_mut() {
            *pool = vec![value.to_string()];
        }
        spec
    }

    #[test]
    fn shifts_following_spans() {
        let s = sentence("[**Name**] takes aspirin", &[("Drug", 17, 24)]);
        let out = synthesize_placeholders(&s, &fixed_spec("Jane Doe")).unwrap();
        assert_eq!(out.text, "Jane Doe takes aspirin");
        assert_eq!((out.spans[0].char_start, out.spans[0].char_end), (15, 22));
        out.spans[0].check(&out.text).unwrap();
    }

    #[test]
    fn spans_before_placeholder_stay_put() {
        let s = sentence(
            "aspirin for [**Name**] and ibuprofen",
            &[("Drug", 0, 7), ("Drug", 27, 36)],
        );
        let out = synthesize_placeholders(&s, &fixed_spec("Bo")).unwrap();
        assert_eq!(out.text, "aspirin for Bo and ibuprofen");
        for sp in &out.spans {
            sp.check(&out.text).unwrap();
        }
        assert_eq!(out.spans[0].char_start, 0);
    }

    #[test]
    fn no_placeholder_is_identity() {
        let s = sentence("Take aspirin daily", &[("Drug", 5, 12)]);
        assert_eq!(
            synthesize_placeholders(&s, &SyntheticValueSpec::new(1)).unwrap(),
            s
        );
    }

    #[test]
    fn deterministic() {
        let s = sentence("[**Name**] on [**2115-2-22**] at [**Hospital 1**]", &[]);
        let spec = SyntheticValueSpec::new(42);
        let a = synthesize_placeholders(&s, &spec).unwrap();
        let b = synthesize_placeholders(&s, &spec).unwrap();
        assert_eq!(a, b);
        assert!(!a.text.contains("[**"));
    }

    #[test]
    fn overlap_with_entity_is_rejected() {
        let s = sentence("[**Name**] takes aspirin", &[("Drug", 3, 8)]);
        assert!(matches!(
            synthesize_placeholders(&s, &SyntheticValueSpec::new(1)),
            Err(Error::Integrity(_))
        ));
    }

    #[test]
    fn kind_inference() {
        assert_eq!(
            PlaceholderKind::infer("[**First Name**]"),
            PlaceholderKind::PersonName
        );
        assert_eq!(
            PlaceholderKind::infer("[**2115-2-22**]"),
            PlaceholderKind::Date
        );
        assert_eq!(
            PlaceholderKind::infer("[**Street Address 2**]"),
            PlaceholderKind::Address
        );
        assert_eq!(
            PlaceholderKind::infer("[**Telephone/Fax 3**]"),
            PlaceholderKind::IdNumber
        );
        assert_eq!(
            PlaceholderKind::infer("[**Provider**]"),
            PlaceholderKind::Other
        );
    }

    #[test]
    fn custom_pattern() {
        let spec = fixed_spec("X").with_pattern(r"<[A-Z]+>").unwrap();
        let s = sentence("<NAME> takes aspirin", &[("Drug", 13, 20)]);
        let out = synthesize_placeholders(&s, &spec).unwrap();
        assert_eq!(out.text, "X takes aspirin");
        out.spans[0].check(&out.text).unwrap();
    }
}
