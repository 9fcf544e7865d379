//! Per-code tf-idf cosine similarity between human and machine class
//! documents.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::sets::check_aligned;
use super::Result;
use crate::codebook::CodeRef;
use crate::corpus::Corpus;
use crate::harmonize::LabeledCorpus;
use crate::text::words;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeCosine {
    pub code: CodeRef,
    /// Absent when either class document is empty.
    pub similarity: Option<f64>,
}

type Counts = BTreeMap<String, f64>;

fn class_doc(corpus: &Corpus, lc: &LabeledCorpus, code: &CodeRef) -> Counts {
    let mut counts = Counts::new();
    for (id, set) in lc.paragraph_ids.iter().zip(&lc.sets) {
        if !set.contains(code) {
            continue;
        }
        if let Some(p) = corpus.get(id) {
            for w in words(&p.text) {
                *counts.entry(w).or_default() += 1.0;
            }
        }
    }
    counts
}

/// Cosine of two sparse vectors.
pub fn cosine(a: &Counts, b: &Counts) -> f64 {
    let dot: f64 = a.iter().filter_map(|(k, x)| b.get(k).map(|y| x * y)).sum();
    let na = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Smoothed idf `ln((1 + N) / (1 + df)) + 1` over a document collection of
/// term-count maps.
pub fn idf(docs: &[&Counts]) -> BTreeMap<String, f64> {
    let n = docs.len() as f64;
    let mut df: BTreeMap<&str, f64> = BTreeMap::new();
    for d in docs {
        for k in d.keys() {
            *df.entry(k.as_str()).or_default() += 1.0;
        }
    }
    df.into_iter()
        .map(|(k, f)| (k.to_string(), ((1.0 + n) / (1.0 + f)).ln() + 1.0))
        .collect()
}

fn weight(doc: &Counts, idf: &BTreeMap<String, f64>) -> Counts {
    doc.iter().map(|(k, tf)| (k.clone(), tf * idf[k])).collect()
}

/// For each code, join the texts of paragraphs human-labeled with it into one
/// document and likewise for the machine; weight raw term counts by idf over
/// all non-empty class documents and report the cosine of each pair.
pub fn tfidf_cosine_by_code(
    corpus: &Corpus,
    machine: &LabeledCorpus,
    human: &LabeledCorpus,
    codes: &[CodeRef],
) -> Result<Vec<CodeCosine>> {
    check_aligned(machine, human)?;
    let pairs: Vec<(Counts, Counts)> = codes
        .iter()
        .map(|c| (class_doc(corpus, human, c), class_doc(corpus, machine, c)))
        .collect();
    let collection: Vec<&Counts> = pairs
        .iter()
        .flat_map(|(h, m)| [h, m])
        .filter(|d| !d.is_empty())
        .collect();
    let idf = idf(&collection);
    Ok(codes
        .iter()
        .zip(&pairs)
        .map(|(code, (h, m))| CodeCosine {
            code: code.clone(),
            similarity: (!h.is_empty() && !m.is_empty())
                .then(|| cosine(&weight(h, &idf), &weight(m, &idf))),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(text: &str) -> Counts {
        let mut c = Counts::new();
        for w in words(text) {
            *c.entry(w).or_default() += 1.0;
        }
        c
    }

    #[test]
    fn uniform_idf_reduces_to_count_cosine() {
        let h = counts("budget budget levy");
        let m = counts("budget levy levy");
        let idf = idf(&[&h, &m]);
        let s = cosine(&weight(&h, &idf), &weight(&m, &idf));
        assert!((s - 0.8).abs() < 1e-12);
    }

    #[test]
    fn disjoint_terms() {
        let h = counts("alpha beta");
        let m = counts("gamma");
        let idf = idf(&[&h, &m]);
        assert_eq!(cosine(&weight(&h, &idf), &weight(&m, &idf)), 0.0);
    }
}
