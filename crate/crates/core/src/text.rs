//! Name normalization, tokenization and longest-match vocabulary scanning.

use std::collections::HashMap;

/// Lowercases and collapses internal whitespace. Used for lookup keys only.
pub fn normalize_name(name: &str) -> String {
    name.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Lowercase tokens split on every non-alphanumeric character.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Finds non-overlapping, longest-match occurrences of vocabulary entries in text.
///
/// Matching happens on [`tokenize`]d sequences, so casing, whitespace and
/// punctuation between words do not matter. When two entries tokenize to the
/// same sequence the first one in the vocabulary wins.
#[derive(Debug, Clone)]
pub struct MentionScanner {
    entries: HashMap<Vec<String>, usize>,
    max_len: usize,
}

impl MentionScanner {
    pub fn new<S: AsRef<str>>(vocabulary: &[S]) -> Self {
        let mut entries = HashMap::new();
        let mut max_len = 0;
        for (idx, name) in vocabulary.iter().enumerate() {
            let toks = tokenize(name.as_ref());
            if toks.is_empty() {
                continue;
            }
            max_len = max_len.max(toks.len());
            entries.entry(toks).or_insert(idx);
        }
        Self { entries, max_len }
    }

    /// Vocabulary indices of every match, in text order.
    pub fn scan(&self, text: &str) -> Vec<usize> {
        let toks = tokenize(text);
        let mut out = Vec::new();
        let mut pos = 0;
        while pos < toks.len() {
            let longest = (1..=self.max_len.min(toks.len() - pos))
                .rev()
                .find_map(|len| self.entries.get(&toks[pos..pos + len]).map(|&i| (i, len)));
            match longest {
                Some((idx, len)) => {
                    out.push(idx);
                    pos += len;
                }
                None => pos += 1,
            }
        }
        out
    }
}

/// True when the token sequence of `needle` occurs contiguously in `haystack`.
pub fn contains_token_run(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}
