//! Rule-based lexicon sentiment scoring with negation and booster handling.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{AnnotationRecord, AnnotationRun, RunKind, SentimentLabel, Source};
use crate::corpus::Corpus;
use crate::text::words;

/// Multiplier applied to a hit preceded by a negator.
pub const NEGATION_SCALAR: f64 = -0.74;
/// Tokens inspected before each hit for negators and boosters.
pub const WINDOW: usize = 3;
/// Booster damping at distance 1, 2, 3.
pub const BOOSTER_DAMPING: [f64; 3] = [1.0, 0.95, 0.9];
/// Normalization constant of the compound score.
pub const ALPHA: f64 = 15.0;
pub const POSITIVE_CUTOFF: f64 = 0.05;
pub const NEGATIVE_CUTOFF: f64 = -0.05;

const BUNDLED_VALENCE: &str = include_str!("../data/lexicon/valence.tsv");
const BUNDLED_BOOSTERS: &str = include_str!("../data/lexicon/boosters.tsv");
const BUNDLED_NEGATORS: &str = include_str!("../data/lexicon/negators.txt");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("{file}:{line}: {message}")]
    ParseError {
        file: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SentimentLexicon {
    pub valence: HashMap<String, f64>,
    pub boosters: HashMap<String, f64>,
    pub negators: HashSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredSentiment {
    pub compound: f64,
    pub raw_sum: f64,
    pub hit_count: usize,
}

fn parse_pairs(text: &str, file: &str) -> Result<HashMap<String, f64>, LexiconError> {
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| LexiconError::ParseError {
            file: file.to_string(),
            line: i + 1,
            message,
        };
        let mut cols = line.split('\t');
        let token = cols.next().unwrap_or("").trim().to_lowercase();
        let value = cols
            .next()
            .ok_or_else(|| err(format!("expected `token<TAB>value`, got `{line}`")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| err(format!("bad number `{value}`")))?;
        if token.is_empty() {
            return Err(err("empty token".into()));
        }
        if out.insert(token.clone(), value).is_some() {
            tracing::warn!("{file}:{}: duplicate token `{token}` overrides earlier entry", i + 1);
        }
    }
    Ok(out)
}

fn parse_negators(text: &str) -> HashSet<String> {
    text.lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect()
}

impl SentimentLexicon {
    pub fn from_strs(valence: &str, boosters: &str, negators: &str) -> Result<Self, LexiconError> {
        Ok(SentimentLexicon {
            valence: parse_pairs(valence, "valence")?,
            boosters: parse_pairs(boosters, "boosters")?,
            negators: parse_negators(negators),
        })
    }

    /// The lexicon shipped with the crate (general-purpose English valences).
    pub fn bundled() -> Self {
        Self::from_strs(BUNDLED_VALENCE, BUNDLED_BOOSTERS, BUNDLED_NEGATORS)
            .expect("bundled lexicon parses")
    }

    fn is_negator(&self, token: &str) -> bool {
        self.negators.contains(token) || token.ends_with("n't") || token.ends_with("n’t")
    }

    pub fn score(&self, text: &str) -> ScoredSentiment {
        score_paragraph(self, text)
    }
}

pub fn load_lexicon(
    valence_path: impl AsRef<Path>,
    booster_path: impl AsRef<Path>,
    negator_path: impl AsRef<Path>,
) -> Result<SentimentLexicon, LexiconError> {
    let read = |p: &Path| std::fs::read_to_string(p);
    let (v, b, n) = (
        valence_path.as_ref(),
        booster_path.as_ref(),
        negator_path.as_ref(),
    );
    Ok(SentimentLexicon {
        valence: parse_pairs(&read(v)?, &v.display().to_string())?,
        boosters: parse_pairs(&read(b)?, &b.display().to_string())?,
        negators: parse_negators(&read(n)?),
    })
}

pub fn compound_from_sum(raw_sum: f64) -> f64 {
    raw_sum / (raw_sum * raw_sum + ALPHA).sqrt()
}

/// Score a paragraph: each valence hit is negated when a negator occurs in
/// the preceding window, then boosted by preceding booster tokens in the
/// direction of its sign.
pub fn score_paragraph(lex: &SentimentLexicon, text: &str) -> ScoredSentiment {
    let tokens = words(text);
    let mut raw_sum = 0.0;
    let mut hit_count = 0;
    for (i, tok) in tokens.iter().enumerate() {
        if lex.boosters.contains_key(tok) {
            continue;
        }
        let Some(&base) = lex.valence.get(tok) else {
            continue;
        };
        hit_count += 1;
        let window = &tokens[i.saturating_sub(WINDOW)..i];
        let mut v = base;
        if window.iter().any(|t| lex.is_negator(t)) {
            v *= NEGATION_SCALAR;
        }
        let sign = if v < 0.0 { -1.0 } else { 1.0 };
        let mut boost = 0.0;
        for (d, prev) in window.iter().rev().enumerate() {
            if lex.valence.contains_key(prev) {
                continue;
            }
            if let Some(&inc) = lex.boosters.get(prev) {
                boost += sign * inc * BOOSTER_DAMPING[d];
            }
        }
        raw_sum += v + boost;
    }
    let compound = if hit_count > 0 {
        compound_from_sum(raw_sum)
    } else {
        0.0
    };
    ScoredSentiment {
        compound,
        raw_sum,
        hit_count,
    }
}

/// Three-way cutoff classification; both boundaries are inclusive.
pub fn classify(compound: f64) -> SentimentLabel {
    if compound >= POSITIVE_CUTOFF {
        SentimentLabel::Positive
    } else if compound <= NEGATIVE_CUTOFF {
        SentimentLabel::Negative
    } else {
        SentimentLabel::Neutral
    }
}

/// Score and classify every paragraph of a corpus.
pub fn annotate_corpus_lexicon(lex: &SentimentLexicon, corpus: &Corpus, run_id: &str) -> AnnotationRun {
    use rayon::prelude::*;
    let mut run = AnnotationRun::new(run_id, Source::Lexicon, RunKind::Sentiment);
    run.config = serde_json::json!({
        "negation_scalar": NEGATION_SCALAR,
        "window": WINDOW,
        "alpha": ALPHA,
        "positive_cutoff": POSITIVE_CUTOFF,
        "negative_cutoff": NEGATIVE_CUTOFF,
        "valence_entries": lex.valence.len(),
    });
    run.annotations = corpus
        .paragraphs
        .par_iter()
        .map(|p| {
            let s = score_paragraph(lex, &p.text);
            AnnotationRecord {
                paragraph_id: p.id.clone(),
                labels: Vec::new(),
                sentiment: Some(classify(s.compound)),
                reasoning: format!(
                    "compound={:.4} raw_sum={:.4} hits={}",
                    s.compound, s.raw_sum, s.hit_count
                ),
                raw_text: String::new(),
            }
        })
        .collect();
    run.finished_at = chrono::Utc::now();
    run
}
