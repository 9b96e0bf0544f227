//! Word-level tokenization with punctuation detachment.
//!
//! Text is split on whitespace, then each chunk is split further: a
//! punctuation character becomes its own token unless it sits between two
//! alphanumeric characters of the same chunk (`2.5`, `z.B`, `Anti-Xa`).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    #[serde(rename = "start")]
    pub char_start: usize,
    #[serde(rename = "end")]
    pub char_end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedSentence {
    pub text: String,
    pub tokens: Vec<Token>,
}

impl TokenizedSentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    /// Minimal inclusive token range covering every token that overlaps
    /// chars `[start, end)`, or `None` when no token does.
    pub fn char_span_to_token_span(
        &self,
        start: usize,
        end: usize,
    ) -> Result<Option<(usize, usize)>> {
        let len = self.text.chars().count();
        if start >= end || end > len {
            return Err(Error::Range(format!(
                "char span ({start}, {end}) invalid for text of length {len}"
            )));
        }
        let mut hit: Option<(usize, usize)> = None;
        for (i, tok) in self.tokens.iter().enumerate() {
            if tok.char_start < end && tok.char_end > start {
                hit = Some(match hit {
                    None => (i, i),
                    Some((first, _)) => (first, i),
                });
            }
        }
        Ok(hit)
    }

    /// Char span `[tokens[first].start, tokens[last].end)`.
    pub fn token_span_to_char_span(&self, first: usize, last: usize) -> Result<(usize, usize)> {
        if first > last || last >= self.tokens.len() {
            return Err(Error::Range(format!(
                "token span ({first}, {last}) invalid for {} tokens",
                self.tokens.len()
            )));
        }
        Ok((self.tokens[first].char_start, self.tokens[last].char_end))
    }
}

/// Tokenizer configuration. The default punctuation predicate is the
/// Unicode `P*` categories plus currency symbols; `punctuation` replaces it
/// with an explicit character set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tokenizer {
    pub punctuation: Option<BTreeSet<char>>,
}

pub fn is_default_punctuation(c: char) -> bool {
    use GeneralCategory::*;
    matches!(
        get_general_category(c),
        ConnectorPunctuation
            | DashPunctuation
            | OpenPunctuation
            | ClosePunctuation
            | InitialPunctuation
            | FinalPunctuation
            | OtherPunctuation
            | CurrencySymbol
    )
}

impl Tokenizer {
    pub fn with_punctuation(set: impl IntoIterator<Item = char>) -> Self {
        Tokenizer {
            punctuation: Some(set.into_iter().collect()),
        }
    }

    fn is_punct(&self, c: char) -> bool {
        match &self.punctuation {
            Some(set) => set.contains(&c),
            None => is_default_punctuation(c),
        }
    }

    pub fn tokenize(&self, text: &str) -> TokenizedSentence {
        let chars: Vec<char> = text.chars().collect();
        let mut tokens = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            if chars[i].is_whitespace() {
                i += 1;
                continue;
            }
            let start = i;
            while i < chars.len() && !chars[i].is_whitespace() {
                i += 1;
            }
            self.split_chunk(&chars, start, i, &mut tokens);
        }
        TokenizedSentence {
            text: text.to_string(),
            tokens,
        }
    }

    fn split_chunk(&self, chars: &[char], lo: usize, hi: usize, out: &mut Vec<Token>) {
        let mut pending = lo;
        let push = |s: usize, e: usize, out: &mut Vec<Token>| {
            if s < e {
                out.push(Token {
                    surface: chars[s..e].iter().collect(),
                    char_start: s,
                    char_end: e,
                });
            }
        };
        for k in lo..hi {
            if !self.is_punct(chars[k]) {
                continue;
            }
            let interior = k > lo
                && k + 1 < hi
                && chars[k - 1].is_alphanumeric()
                && chars[k + 1].is_alphanumeric();
            if interior {
                continue;
            }
            push(pending, k, out);
            push(k, k + 1, out);
            pending = k + 1;
        }
        push(pending, hi, out);
    }
}

/// Tokenizes with the default configuration.
pub fn tokenize(text: &str) -> TokenizedSentence {
    Tokenizer::default().tokenize(text)
}
