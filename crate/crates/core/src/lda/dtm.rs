//! Document-term matrix construction.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

use super::LdaError;
use crate::corpus::Corpus;

const ENGLISH_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

pub fn english_stopwords() -> Vec<String> {
    ENGLISH_STOPWORDS.lines().map(str::to_string).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DtmOptions {
    pub lowercase: bool,
    pub strip_punct: bool,
    pub stopwords: Vec<String>,
    /// Terms with fewer total occurrences are dropped.
    pub min_term_count: usize,
}

impl Default for DtmOptions {
    fn default() -> Self {
        DtmOptions {
            lowercase: true,
            strip_punct: true,
            stopwords: english_stopwords(),
            min_term_count: 2,
        }
    }
}

impl DtmOptions {
    /// No case folding beyond tokenization, no stopwords, no count filter.
    pub fn none() -> Self {
        DtmOptions {
            lowercase: true,
            strip_punct: true,
            stopwords: Vec::new(),
            min_term_count: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocTermMatrix {
    /// Sorted, unique.
    pub vocab: Vec<String>,
    /// Sparse `(term, count)` pairs per document, terms ascending.
    pub docs: Vec<Vec<(u32, u32)>>,
    pub doc_ids: Vec<String>,
}

impl DocTermMatrix {
    pub fn n_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn n_terms(&self) -> usize {
        self.vocab.len()
    }

    pub fn doc_len(&self, d: usize) -> usize {
        self.docs[d].iter().map(|&(_, c)| c as usize).sum()
    }

    pub fn n_tokens(&self) -> usize {
        (0..self.n_docs()).map(|d| self.doc_len(d)).sum()
    }

    /// Dense row for document `d`.
    pub fn dense(&self, d: usize) -> Vec<u32> {
        let mut row = vec![0; self.n_terms()];
        for &(w, c) in &self.docs[d] {
            row[w as usize] = c;
        }
        row
    }

    /// Build from per-document token id lists over a given vocabulary.
    pub fn from_token_ids(vocab: Vec<String>, docs: &[Vec<u32>], doc_ids: Vec<String>) -> Self {
        let docs = docs
            .iter()
            .map(|toks| {
                let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
                for &t in toks {
                    *counts.entry(t).or_default() += 1;
                }
                counts.into_iter().collect()
            })
            .collect();
        DocTermMatrix {
            vocab,
            docs,
            doc_ids,
        }
    }

    /// Flattened token ids of document `d` in term order.
    pub fn tokens(&self, d: usize) -> Vec<u32> {
        self.docs[d]
            .iter()
            .flat_map(|&(w, c)| std::iter::repeat(w).take(c as usize))
            .collect()
    }
}

fn tokenize(text: &str, opts: &DtmOptions) -> Vec<String> {
    let raw: Vec<&str> = if opts.strip_punct {
        text.unicode_words().collect()
    } else {
        text.split_word_bounds().filter(|t| !t.trim().is_empty()).collect()
    };
    raw.into_iter()
        .map(|t| if opts.lowercase { t.to_lowercase() } else { t.to_string() })
        .collect()
}

/// Tokenize on Unicode word boundaries, then apply lowercasing, punctuation
/// stripping, stopword removal and the minimum term count, in that order.
pub fn build_dtm_texts(ids: &[String], texts: &[&str], opts: &DtmOptions) -> Result<DocTermMatrix, LdaError> {
    let stop: HashSet<String> = opts
        .stopwords
        .iter()
        .map(|s| if opts.lowercase { s.to_lowercase() } else { s.clone() })
        .collect();
    let tokenized: Vec<Vec<String>> = texts
        .iter()
        .map(|t| tokenize(t, opts).into_iter().filter(|w| !stop.contains(w)).collect())
        .collect();
    let mut totals: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in &tokenized {
        for w in doc {
            *totals.entry(w.as_str()).or_default() += 1;
        }
    }
    let vocab: Vec<String> = totals
        .into_iter()
        .filter(|&(_, c)| c >= opts.min_term_count.max(1))
        .map(|(w, _)| w.to_string())
        .collect();
    if vocab.is_empty() {
        return Err(LdaError::EmptyVocabulary);
    }
    let docs: Vec<Vec<u32>> = tokenized
        .iter()
        .map(|doc| {
            doc.iter()
                .filter_map(|w| vocab.binary_search(w).ok().map(|i| i as u32))
                .collect()
        })
        .collect();
    Ok(DocTermMatrix::from_token_ids(vocab, &docs, ids.to_vec()))
}

pub fn build_dtm(corpus: &Corpus, opts: &DtmOptions) -> Result<DocTermMatrix, LdaError> {
    let ids: Vec<String> = corpus.ids().map(str::to_string).collect();
    let texts: Vec<&str> = corpus.paragraphs.iter().map(|p| p.text.as_str()).collect();
    build_dtm_texts(&ids, &texts, opts)
}
