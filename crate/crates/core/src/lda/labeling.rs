//! Human topic labeling worksheet and topic-to-code assignment.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::diagnostics::{top_docs, top_indices, top_words};
use super::gibbs::TopicModel;
use super::LdaError;
use crate::annotation::{AnnotationRecord, AnnotationRun, RunKind, Source, MAX_LABELS};
use crate::codebook::{CodeRef, Codebook};

pub const WORKSHEET_HEADER: [&str; 7] = [
    "topic_id",
    "top_words",
    "top_doc_ids",
    "label_level",
    "label",
    "coherence_rating",
    "rationale",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicLabel {
    pub topic_id: usize,
    pub label: Option<CodeRef>,
    /// 1 (incoherent) to 4 (fully coherent).
    pub coherence_rating: Option<u8>,
    pub rationale: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TopicLabelMap {
    pub topics: Vec<TopicLabel>,
}

impl TopicLabelMap {
    pub fn label(&self, topic_id: usize) -> Option<&CodeRef> {
        self.topics
            .iter()
            .find(|t| t.topic_id == topic_id)
            .and_then(|t| t.label.as_ref())
    }

    pub fn labeled_count(&self) -> usize {
        self.topics.iter().filter(|t| t.label.is_some()).count()
    }

    /// Read a completed worksheet. Empty label cells leave the topic
    /// unlabeled; labels must exist in the codebook at the stated level.
    pub fn from_worksheet(input: impl Read, cb: &Codebook) -> Result<Self, LdaError> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers().map_err(csv_err(1))?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| LdaError::Worksheet {
                    line: 1,
                    message: format!("missing column `{name}`"),
                })
        };
        let (c_id, c_level, c_label, c_rating, c_rat) = (
            col("topic_id")?,
            col("label_level")?,
            col("label")?,
            col("coherence_rating")?,
            col("rationale")?,
        );
        let mut topics = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(csv_err(line))?;
            let bad = |message: String| LdaError::Worksheet { line, message };
            let cell = |c: usize| rec.get(c).unwrap_or("").trim();
            let topic_id: usize = cell(c_id)
                .parse()
                .map_err(|_| bad(format!("bad topic id `{}`", cell(c_id))))?;
            let label = match cell(c_label) {
                "" => None,
                text => {
                    let found = match cell(c_level).to_ascii_lowercase().as_str() {
                        "child" => cb.resolve_child(text),
                        "parent" => cb.resolve_parent(text),
                        "" => cb.resolve(text),
                        other => return Err(bad(format!("bad label level `{other}`"))),
                    };
                    Some(found.ok_or_else(|| bad(format!("label `{text}` is not in the codebook")))?)
                }
            };
            let coherence_rating = match cell(c_rating) {
                "" => None,
                s => match s.parse::<u8>() {
                    Ok(n @ 1..=4) => Some(n),
                    _ => return Err(bad(format!("coherence rating `{s}` not in 1..=4"))),
                },
            };
            let rationale = Some(cell(c_rat).to_string()).filter(|s| !s.is_empty());
            if topics.iter().any(|t: &TopicLabel| t.topic_id == topic_id) {
                return Err(bad(format!("topic {topic_id} listed twice")));
            }
            topics.push(TopicLabel {
                topic_id,
                label,
                coherence_rating,
                rationale,
            });
        }
        Ok(TopicLabelMap { topics })
    }
}

fn csv_err(line: usize) -> impl Fn(csv::Error) -> LdaError {
    move |e| LdaError::Worksheet {
        line,
        message: e.to_string(),
    }
}

/// Worksheet with the top words and top documents of every topic and empty
/// label, rating and rationale cells. An existing map pre-fills those cells.
pub fn export_worksheet(
    model: &TopicModel,
    n_words: usize,
    n_docs: usize,
    existing: Option<&TopicLabelMap>,
    out: impl Write,
) -> Result<(), LdaError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(WORKSHEET_HEADER).map_err(csv_err(0))?;
    for k in 0..model.k {
        let prior = existing.and_then(|m| m.topics.iter().find(|t| t.topic_id == k));
        let (level, label) = match prior.and_then(|t| t.label.as_ref()) {
            Some(c) => (c.level().to_string(), c.label().to_string()),
            None => (String::new(), String::new()),
        };
        w.write_record([
            k.to_string(),
            top_words(model, k, n_words)?.join(" "),
            top_docs(model, k, n_docs)?.join(" "),
            level,
            label,
            prior
                .and_then(|t| t.coherence_rating)
                .map(|r| r.to_string())
                .unwrap_or_default(),
            prior.and_then(|t| t.rationale.clone()).unwrap_or_default(),
        ])
        .map_err(csv_err(k + 2))?;
    }
    w.flush()?;
    Ok(())
}

/// Codes for one paragraph: its three highest-proportion topics (ties by
/// topic index) mapped through the label map; unlabeled topics are dropped,
/// not replaced, and duplicate codes removed.
pub fn assign_topics(model: &TopicModel, map: &TopicLabelMap, paragraph_index: usize) -> Vec<CodeRef> {
    let mut out = Vec::new();
    for t in top_indices(&model.theta[paragraph_index], MAX_LABELS) {
        if let Some(code) = map.label(t) {
            if !out.contains(code) {
                out.push(code.clone());
            }
        }
    }
    out
}

/// Topic-based label sets for every modeled paragraph.
pub fn annotate_corpus_lda(model: &TopicModel, map: &TopicLabelMap, run_id: &str) -> AnnotationRun {
    let mut run = AnnotationRun::new(run_id, Source::Lda, RunKind::Thematic);
    run.config = serde_json::json!({
        "k": model.k,
        "alpha": model.alpha,
        "beta": model.beta,
        "iterations": model.iterations,
        "burn_in": model.burn_in,
        "seed": model.seed,
        "labeled_topics": map.labeled_count(),
    });
    for (d, id) in model.doc_ids.iter().enumerate() {
        let top = top_indices(&model.theta[d], MAX_LABELS);
        let reasoning = top
            .iter()
            .map(|&t| format!("topic {t} ({:.3})", model.theta[d][t]))
            .collect::<Vec<_>>()
            .join(", ");
        run.annotations.push(AnnotationRecord {
            paragraph_id: id.clone(),
            labels: assign_topics(model, map, d),
            sentiment: None,
            reasoning,
            raw_text: String::new(),
        });
    }
    run.finished_at = chrono::Utc::now();
    run
}
