//! Full evaluation of one machine run against a reference run.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::binary::{macro_prf, micro_prf, Prf};
use super::bootstrap::{codewise_metrics, pooled_matrix_metrics, CodewiseMetric, MetricValue, PooledMetrics};
use super::sentiment::{agreement_by_theme, sentiment_confusion, SentimentAgreement, ThemeAgreement};
use super::sets::{hit_rate, overlap_coefficients, shuffled_hit_rate, Overlap};
use super::tfidf::{tfidf_cosine_by_code, CodeCosine};
use super::{MetricsError, Result};
use crate::annotation::AnnotationRun;
use crate::codebook::Codebook;
use crate::corpus::Corpus;
use crate::harmonize::{at_level, code_universe, one_hot, restrict, LabeledCorpus, Level};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub bootstrap_iters: usize,
    pub shuffle_repeats: usize,
    pub seed: u64,
    /// Keep parent-only labels as codes at the original level.
    pub include_parent_only: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            bootstrap_iters: 100,
            shuffle_repeats: 100,
            seed: 0,
            include_parent_only: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub level: Level,
    pub source_pair: String,
    pub machine_run: String,
    pub reference_run: String,
    pub n_paragraphs: usize,
    pub hit_rate: Option<f64>,
    pub shuffled_hit_rate: Option<MetricValue>,
    pub overlap: Option<Overlap>,
    pub micro: Prf,
    #[serde(rename = "macro")]
    pub macro_: Prf,
    pub pooled: PooledMetrics,
    pub codewise: Vec<CodewiseMetric>,
    pub cosine: Vec<CodeCosine>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentReport {
    pub source_pair: String,
    pub machine_run: String,
    pub reference_run: String,
    pub agreement: SentimentAgreement,
    pub by_theme: Vec<ThemeAgreement>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalSummary {
    pub options: Option<EvalOptions>,
    pub thematic: Vec<EvalReport>,
    pub sentiment: Vec<SentimentReport>,
}

fn optional<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(MetricsError::NoEligibleParagraphs) | Err(MetricsError::TooFewRows(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Evaluate a thematic run against a reference at one level.
pub fn evaluate_thematic(
    corpus: &Corpus,
    cb: &Codebook,
    machine: &AnnotationRun,
    reference: &AnnotationRun,
    level: Level,
    opts: &EvalOptions,
) -> std::result::Result<EvalReport, anyhow::Error> {
    let universe = code_universe(cb, level, opts.include_parent_only);
    let m = restrict(&at_level(&LabeledCorpus::from_run(machine, corpus), cb, level)?, &universe);
    let h = restrict(&at_level(&LabeledCorpus::from_run(reference, corpus), cb, level)?, &universe);
    let mh = one_hot(&m, &universe)?;
    let hh = one_hot(&h, &universe)?;
    let seed = opts.seed;
    Ok(EvalReport {
        level,
        source_pair: format!("{} vs {}", machine.run_id, reference.run_id),
        machine_run: machine.run_id.clone(),
        reference_run: reference.run_id.clone(),
        n_paragraphs: m.len(),
        hit_rate: optional(hit_rate(&m, &h))?,
        shuffled_hit_rate: optional(shuffled_hit_rate(&m, &h, seed, opts.shuffle_repeats))?,
        overlap: optional(overlap_coefficients(&m, &h))?,
        micro: micro_prf(&mh.cells, &hh.cells)?,
        macro_: macro_prf(&mh.cells, &hh.cells)?,
        pooled: pooled_matrix_metrics(&mh, &hh, opts.bootstrap_iters, seed)?,
        codewise: codewise_metrics(&mh, &hh, opts.bootstrap_iters, seed)?,
        cosine: tfidf_cosine_by_code(corpus, &m, &h, &universe)?,
    })
}

/// Evaluate a sentiment run on the paragraphs both runs annotated.
pub fn evaluate_sentiment(
    corpus: &Corpus,
    machine: &AnnotationRun,
    reference: &AnnotationRun,
    reference_themes: Option<&AnnotationRun>,
) -> Result<SentimentReport> {
    let m = machine.sentiments();
    let annotated: std::collections::HashSet<&str> = m.iter().map(|(id, _)| id.as_str()).collect();
    let h: Vec<_> = reference
        .sentiments()
        .into_iter()
        .filter(|(id, _)| annotated.contains(id.as_str()))
        .collect();
    let agreement = sentiment_confusion(&m, &h)?;
    let by_theme = reference_themes
        .map(|t| agreement_by_theme(&m, &h, &LabeledCorpus::from_run(t, corpus)))
        .unwrap_or_default();
    Ok(SentimentReport {
        source_pair: format!("{} vs {}", machine.run_id, reference.run_id),
        machine_run: machine.run_id.clone(),
        reference_run: reference.run_id.clone(),
        agreement,
        by_theme,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatRow {
    pub metric: String,
    pub level: String,
    pub source_pair: String,
    pub code: String,
    pub value: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

impl EvalSummary {
    /// One row per metric value.
    pub fn flat_rows(&self) -> Vec<FlatRow> {
        let mut rows = Vec::new();
        for r in &self.thematic {
            let level = r.level.as_str();
            let mut push = |metric: &str, code: &str, v: f64, lo: Option<f64>, hi: Option<f64>| {
                rows.push(FlatRow {
                    metric: metric.into(),
                    level: level.into(),
                    source_pair: r.source_pair.clone(),
                    code: code.into(),
                    value: v,
                    ci_low: lo,
                    ci_high: hi,
                })
            };
            let mv = |push: &mut dyn FnMut(&str, &str, f64, Option<f64>, Option<f64>),
                      metric: &str,
                      code: &str,
                      v: &MetricValue| push(metric, code, v.value, v.ci_low, v.ci_high);
            if let Some(h) = r.hit_rate {
                push("hit_rate", "", h, None, None);
            }
            if let Some(s) = &r.shuffled_hit_rate {
                mv(&mut push, "shuffled_hit_rate", "", s);
            }
            if let Some(o) = &r.overlap {
                push("simpson", "", o.simpson, None, None);
                push("dice", "", o.dice, None, None);
                push("jaccard", "", o.jaccard, None, None);
            }
            push("micro_precision", "", r.micro.precision, None, None);
            push("micro_recall", "", r.micro.recall, None, None);
            push("micro_f1", "", r.micro.f1, None, None);
            push("macro_precision", "", r.macro_.precision, None, None);
            push("macro_recall", "", r.macro_.recall, None, None);
            push("macro_f1", "", r.macro_.f1, None, None);
            mv(&mut push, "accuracy", "", &r.pooled.accuracy);
            mv(&mut push, "kappa", "", &r.pooled.kappa);
            if let Some(a) = &r.pooled.auc {
                mv(&mut push, "auc", "", a);
            }
            for c in &r.codewise {
                mv(&mut push, "code_kappa", c.code.label(), &c.kappa);
                if let Some(a) = &c.auc {
                    mv(&mut push, "code_auc", c.code.label(), a);
                }
            }
            for c in &r.cosine {
                if let Some(s) = c.similarity {
                    push("code_cosine", c.code.label(), s, None, None);
                }
            }
        }
        for s in &self.sentiment {
            let mut push = |metric: &str, code: &str, v: f64| {
                rows.push(FlatRow {
                    metric: metric.into(),
                    level: "sentiment".into(),
                    source_pair: s.source_pair.clone(),
                    code: code.into(),
                    value: v,
                    ci_low: None,
                    ci_high: None,
                })
            };
            push("accuracy", "", s.agreement.accuracy);
            push("kappa", "", s.agreement.kappa);
            for t in &s.by_theme {
                push("theme_agreement_pct", t.code.label(), t.agreement_pct);
            }
        }
        rows
    }

    pub fn write_csv(&self, out: impl Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in self.flat_rows() {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}
