use std::path::Path;

use crate::error::{Error, Result};
use crate::tokenizer::Tokenizer;

pub const DEFAULT_MAX_PAIR_LEN: usize = 200;
pub const PARALLEL_DELIMITER: &str = " ||| ";

/// Tokenized sentence pairs ready for alignment training.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelCorpus {
    pairs: Vec<(Vec<String>, Vec<String>)>,
}

impl ParallelCorpus {
    /// Validates every pair: both sides nonempty and at most `max_len` tokens.
    pub fn new(pairs: Vec<(Vec<String>, Vec<String>)>, max_len: usize) -> Result<Self> {
        for (idx, (src, tgt)) in pairs.iter().enumerate() {
            check_pair(src.len(), tgt.len(), max_len)
                .map_err(|msg| Error::Precondition(format!("sentence pair {}: {msg}", idx + 1)))?;
        }
        Ok(ParallelCorpus { pairs })
    }

    /// Builds a corpus from whitespace-tokenized strings.
    pub fn from_whitespace<S: AsRef<str>>(pairs: &[(S, S)]) -> Result<Self> {
        let split = |s: &str| s.split_whitespace().map(str::to_string).collect::<Vec<_>>();
        Self::new(
            pairs
                .iter()
                .map(|(a, b)| (split(a.as_ref()), split(b.as_ref())))
                .collect(),
            DEFAULT_MAX_PAIR_LEN,
        )
    }

    pub fn pairs(&self) -> &[(Vec<String>, Vec<String>)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

pub(crate) fn check_pair(
    src: usize,
    tgt: usize,
    max_len: usize,
) -> std::result::Result<(), String> {
    if src == 0 || tgt == 0 {
        return Err("empty side".into());
    }
    if src > max_len || tgt > max_len {
        return Err(format!("longer than {max_len} tokens"));
    }
    Ok(())
}

/// Splits one ` ||| ` line into its raw source and target text.
pub fn split_parallel_line(line: &str, line_no: usize) -> Result<(&str, &str)> {
    line.split_once(PARALLEL_DELIMITER)
        .or_else(|| {
            // Tolerate an empty side written without the surrounding space.
            line.split_once("|||")
        })
        .map(|(a, b)| (a.trim(), b.trim()))
        .ok_or_else(|| Error::Parse {
            line: line_no,
            message: "missing ` ||| ` delimiter".into(),
        })
}

/// Reads a parallel file and tokenizes both sides. Every line is returned,
/// including ones that would fail corpus validation.
pub fn read_parallel_file(
    path: &Path,
    tokenizer: &Tokenizer,
) -> Result<Vec<(Vec<String>, Vec<String>)>> {
    let content = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    content
        .lines()
        .enumerate()
        .map(|(i, line)| {
            let (src, tgt) = split_parallel_line(line, i + 1)?;
            let tok = |s: &str| {
                tokenizer
                    .tokenize(s)
                    .tokens
                    .into_iter()
                    .map(|t| t.surface)
                    .collect::<Vec<_>>()
            };
            Ok((tok(src), tok(tgt)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_long_pairs() {
        assert!(ParallelCorpus::from_whitespace(&[("a", "")]).is_err());
        let long = vec!["x".to_string(); 5];
        assert!(ParallelCorpus::new(vec![(long.clone(), long)], 4).is_err());
        assert!(ParallelCorpus::from_whitespace(&[("a b", "c")]).is_ok());
    }

    #[test]
    fn splits_lines() {
        assert_eq!(
            split_parallel_line("a b ||| c d", 1).unwrap(),
            ("a b", "c d")
        );
        assert!(split_parallel_line("a b c", 3).is_err());
    }
}
