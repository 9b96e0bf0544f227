use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// Word alignment links as 0-based `(source, target)` pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct AlignmentLinks(pub BTreeSet<(usize, usize)>);

impl AlignmentLinks {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn identity(n: usize) -> Self {
        (0..n).map(|i| (i, i)).collect()
    }

    pub fn insert(&mut self, source: usize, target: usize) -> bool {
        self.0.insert((source, target))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(usize, usize)> {
        self.0.iter()
    }

    /// True when no target index is linked more than once, which every
    /// Viterbi decode guarantees. External aligners may violate it.
    pub fn is_target_functional(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.0.iter().all(|&(_, t)| seen.insert(t))
    }

    /// Checks that every link fits a pair with the given token counts.
    pub fn check_bounds(&self, source_len: usize, target_len: usize) -> Result<()> {
        match self
            .0
            .iter()
            .find(|&&(s, t)| s >= source_len || t >= target_len)
        {
            Some(&(s, t)) => Err(Error::Range(format!(
                "alignment link {s}-{t} outside a {source_len}x{target_len} sentence pair"
            ))),
            None => Ok(()),
        }
    }
}

impl FromIterator<(usize, usize)> for AlignmentLinks {
    fn from_iter<I: IntoIterator<Item = (usize, usize)>>(iter: I) -> Self {
        AlignmentLinks(iter.into_iter().collect())
    }
}

impl fmt::Display for AlignmentLinks {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&emit_pharaoh(self))
    }
}

/// Parses a Pharaoh line of whitespace-separated `i-j` pairs.
/// Column numbers in errors are 1-based char positions.
pub fn parse_pharaoh(line: &str) -> Result<AlignmentLinks> {
    let mut links = AlignmentLinks::new();
    let mut column = 0;
    let mut chars = line.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            column += 1;
            continue;
        }
        let token_column = column + 1;
        let mut end = start;
        while let Some(&(b, c)) = chars.peek() {
            if c.is_whitespace() {
                break;
            }
            end = b + c.len_utf8();
            chars.next();
            column += 1;
        }
        let token = &line[start..end];
        let parsed = token.split_once('-').and_then(|(a, b)| {
            let digits = |s: &str| !s.is_empty() && s.bytes().all(|x| x.is_ascii_digit());
            if digits(a) && digits(b) {
                Some((a.parse().ok()?, b.parse().ok()?))
            } else {
                None
            }
        });
        match parsed {
            Some((i, j)) => {
                links.insert(i, j);
            }
            None => {
                return Err(Error::AlignmentParse {
                    column: token_column,
                    token: token.to_string(),
                })
            }
        }
    }
    Ok(links)
}

/// Emits links sorted by `(source, target)`, space separated.
pub fn emit_pharaoh(links: &AlignmentLinks) -> String {
    links
        .0
        .iter()
        .map(|(i, j)| format!("{i}-{j}"))
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_pairs() {
        let links = parse_pharaoh("0-0 1-2 2-1").unwrap();
        assert_eq!(links, [(0, 0), (1, 2), (2, 1)].into_iter().collect());
    }

    #[test]
    fn empty_line() {
        assert!(parse_pharaoh("").unwrap().is_empty());
        assert!(parse_pharaoh("   ").unwrap().is_empty());
    }

    #[test]
    fn duplicates_collapse() {
        assert_eq!(parse_pharaoh("0-0 0-0").unwrap().len(), 1);
    }

    #[test]
    fn malformed_reports_column() {
        match parse_pharaoh("0-0 1x2").unwrap_err() {
            Error::AlignmentParse { column, token } => {
                assert_eq!(column, 5);
                assert_eq!(token, "1x2");
            }
            other => panic!("unexpected {other}"),
        }
        assert!(parse_pharaoh("0-").is_err());
        assert!(parse_pharaoh("-1-2").is_err());
        assert!(parse_pharaoh("1-2-3").is_err());
    }

    #[test]
    fn emits_sorted() {
        let links: AlignmentLinks = [(1, 2), (0, 0)].into_iter().collect();
        assert_eq!(emit_pharaoh(&links), "0-0 1-2");
        assert_eq!(emit_pharaoh(&AlignmentLinks::new()), "");
    }

    #[test]
    fn functional_check() {
        assert!(AlignmentLinks::identity(3).is_target_functional());
        let many: AlignmentLinks = [(0, 1), (2, 1)].into_iter().collect();
        assert!(!many.is_target_functional());
        assert!(many.check_bounds(3, 2).is_ok());
        assert!(many.check_bounds(2, 2).is_err());
    }

    proptest! {
        #[test]
        fn codec_round_trip(pairs in proptest::collection::vec((0usize..300, 0usize..300), 0..40)) {
            let links: AlignmentLinks = pairs.into_iter().collect();
            let line = emit_pharaoh(&links);
            prop_assert_eq!(&parse_pharaoh(&line).unwrap(), &links);
            prop_assert_eq!(emit_pharaoh(&parse_pharaoh(&line).unwrap()), line);
        }
    }
}
