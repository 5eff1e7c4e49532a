//! Text corpus ingestion and a lexical TF-IDF retriever.
//!
//! Tokens are lowercase runs of alphanumeric characters; there is no
//! stemming. Term weights are `tf * idf` with the smoothed
//! `idf = ln((1 + N) / (1 + df)) + 1`, and documents are ranked by cosine
//! similarity against the query vector.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{normalize_name, tokenize};

pub const DEFAULT_MIN_WORDS: usize = 25;
const INDEX_FORMAT: &str = "cgraph-tfidf";
const INDEX_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("query contains no tokens")]
    EmptyQuery,
    #[error("index has no documents")]
    EmptyIndex,
    #[error("unsupported index format {format:?} version {version}")]
    UnsupportedFormat { format: String, version: u32 },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusDocument {
    pub doc_id: u32,
    pub text: String,
    pub source: String,
}

/// Keeps lines with at least `min_words` whitespace-separated tokens, in
/// input order, numbering them from 0.
pub fn ingest<I, S>(lines: I, min_words: usize, source: &str) -> Vec<CorpusDocument>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let min_words = min_words.max(1);
    lines
        .into_iter()
        .filter(|l| l.as_ref().split_whitespace().count() >= min_words)
        .enumerate()
        .map(|(i, l)| CorpusDocument {
            doc_id: i as u32,
            text: l.as_ref().trim().to_string(),
            source: source.to_string(),
        })
        .collect()
}

pub fn ingest_reader<R: BufRead>(reader: R, min_words: usize, source: &str) -> std::io::Result<Vec<CorpusDocument>> {
    let lines = reader.lines().collect::<Result<Vec<_>, _>>()?;
    Ok(ingest(lines, min_words, source))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalIndex {
    format: String,
    version: u32,
    doc_count: u32,
    /// term -> document frequency
    vocabulary: BTreeMap<String, u32>,
    /// term -> (doc_id, term frequency), ascending doc_id
    postings: BTreeMap<String, Vec<(u32, u32)>>,
    /// L2 norm of each document's tf-idf vector, indexed by doc_id
    doc_norms: Vec<f64>,
}

impl RetrievalIndex {
    pub fn build(docs: &[CorpusDocument]) -> Self {
        let mut postings: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
        for (pos, doc) in docs.iter().enumerate() {
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for t in tokenize(&doc.text) {
                *tf.entry(t).or_default() += 1;
            }
            for (t, c) in tf {
                postings.entry(t).or_default().push((pos as u32, c));
            }
        }
        let vocabulary: BTreeMap<String, u32> = postings.iter().map(|(t, p)| (t.clone(), p.len() as u32)).collect();
        let mut index = Self {
            format: INDEX_FORMAT.into(),
            version: INDEX_VERSION,
            doc_count: docs.len() as u32,
            vocabulary,
            postings,
            doc_norms: vec![0.0; docs.len()],
        };
        let mut sq = vec![0.0f64; docs.len()];
        for (t, plist) in &index.postings {
            let idf = index.idf(t);
            for &(d, c) in plist {
                sq[d as usize] += (c as f64 * idf).powi(2);
            }
        }
        index.doc_norms = sq.into_iter().map(f64::sqrt).collect();
        index
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count as usize
    }

    pub fn document_frequency(&self, term: &str) -> u32 {
        self.vocabulary.get(term).copied().unwrap_or(0)
    }

    /// Smoothed inverse document frequency of an indexed term.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.doc_count as f64;
        let df = self.document_frequency(term) as f64;
        ((1.0 + n) / (1.0 + df)).ln() + 1.0
    }

    /// Up to `k` `(position, score)` hits ordered by descending cosine score,
    /// ties by ascending position. Only documents sharing a term with the
    /// query are returned. Positions index the slice the index was built from.
    pub fn retrieve(&self, query: &str, k: usize) -> Result<Vec<(u32, f64)>, CorpusError> {
        if self.doc_count == 0 {
            return Err(CorpusError::EmptyIndex);
        }
        let toks = tokenize(query);
        if toks.is_empty() {
            return Err(CorpusError::EmptyQuery);
        }
        let mut qtf: BTreeMap<&str, u32> = BTreeMap::new();
        for t in &toks {
            if self.vocabulary.contains_key(t.as_str()) {
                *qtf.entry(t.as_str()).or_default() += 1;
            }
        }
        let mut qnorm = 0.0;
        let mut dots: HashMap<u32, f64> = HashMap::new();
        for (t, c) in qtf {
            let idf = self.idf(t);
            let qw = c as f64 * idf;
            qnorm += qw * qw;
            for &(d, dc) in &self.postings[t] {
                *dots.entry(d).or_default() += qw * dc as f64 * idf;
            }
        }
        let qnorm = qnorm.sqrt();
        let mut hits: Vec<(u32, f64)> = dots
            .into_iter()
            .map(|(d, dot)| (d, dot / (qnorm * self.doc_norms[d as usize])))
            .collect();
        hits.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        hits.truncate(k);
        Ok(hits)
    }

    pub fn save<W: Write>(&self, w: W) -> Result<(), CorpusError> {
        serde_json::to_writer(w, self)?;
        Ok(())
    }

    pub fn load<R: Read>(r: R) -> Result<Self, CorpusError> {
        let index: Self = serde_json::from_reader(r)?;
        if index.format != INDEX_FORMAT || index.version != INDEX_VERSION {
            return Err(CorpusError::UnsupportedFormat {
                format: index.format,
                version: index.version,
            });
        }
        Ok(index)
    }
}

/// Stored introductory paragraphs keyed by normalized concept name.
#[derive(Debug, Clone, Default)]
pub struct WikiStore {
    paragraphs: HashMap<String, String>,
}

#[derive(Debug, Deserialize)]
struct WikiLine {
    concept: String,
    text: String,
}

impl WikiStore {
    pub fn insert(&mut self, concept: &str, text: impl Into<String>) {
        self.paragraphs.insert(normalize_name(concept), text.into());
    }

    pub fn get(&self, concept: &str) -> Option<&str> {
        self.paragraphs.get(&normalize_name(concept)).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.paragraphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paragraphs.is_empty()
    }

    /// Reads JSON Lines `{"concept": text, "text": text}`.
    pub fn from_jsonl<R: BufRead>(reader: R) -> Result<Self, crate::io::IoError> {
        let lines: Vec<WikiLine> = crate::io::read_jsonl(reader)?;
        let mut store = Self::default();
        for l in lines {
            store.insert(&l.concept, l.text);
        }
        Ok(store)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(n: usize) -> String {
        (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn ingest_filters_short_lines() {
        let docs = ingest(["short one".to_string(), words(26)], 25, "tb");
        assert_eq!(docs.len(), 1);
        assert_eq!(docs[0].doc_id, 0);
        let all = ingest(["a", "", "b c"], 1, "tb");
        assert_eq!(all.len(), 2);
        let many: Vec<String> = (0..5).map(|_| words(30)).collect();
        let docs = ingest(&many, 25, "tb");
        assert_eq!(docs.iter().map(|d| d.doc_id).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn unique_term_ranks_first() {
        let docs = ingest(
            ["alpha beta", "beta gamma", "gamma delta", "delta zeta unique", "alpha"],
            1,
            "t",
        );
        let idx = RetrievalIndex::build(&docs);
        let hits = idx.retrieve("unique unique", 2).unwrap();
        assert_eq!(hits[0].0, 3);
        assert!(idx.retrieve("nothing matches", 3).unwrap().is_empty());
        assert!(matches!(idx.retrieve("  ,, ", 3), Err(CorpusError::EmptyQuery)));
        assert!(matches!(
            RetrievalIndex::build(&[]).retrieve("x", 1),
            Err(CorpusError::EmptyIndex)
        ));
    }

    #[test]
    fn ties_break_by_position_and_prefix_property() {
        let docs = ingest(["same words", "same words", "same other words"], 1, "t");
        let idx = RetrievalIndex::build(&docs);
        let all = idx.retrieve("same words", usize::MAX).unwrap();
        assert_eq!(all[0].0, 0);
        assert_eq!(all[1].0, 1);
        assert_eq!(idx.retrieve("same words", 2).unwrap(), all[..2].to_vec());
    }

    #[test]
    fn persisted_index_is_deterministic() {
        let docs = ingest(["b a c", "c c d"], 1, "t");
        let mut one = Vec::new();
        let mut two = Vec::new();
        RetrievalIndex::build(&docs).save(&mut one).unwrap();
        RetrievalIndex::build(&docs).save(&mut two).unwrap();
        assert_eq!(one, two);
        let back = RetrievalIndex::load(one.as_slice()).unwrap();
        assert_eq!(back, RetrievalIndex::build(&docs));
    }

    #[test]
    fn wiki_store_lookup_is_normalized() {
        let store =
            WikiStore::from_jsonl("{\"concept\": \"POS Tagging\", \"text\": \"Tagging words.\"}\n".as_bytes()).unwrap();
        assert_eq!(store.get("pos  tagging"), Some("Tagging words."));
    }
}
