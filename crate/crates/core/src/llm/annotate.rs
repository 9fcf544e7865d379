//! Corpus-level annotation runs and the repeat-annotation reproducibility
//! check.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use chrono::Utc;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{AnnotationRecord, AnnotationRun, Failure, RunKind, SentimentLabel, Source};
use crate::codebook::{CodeLevel, Codebook};
use crate::corpus::{Corpus, Paragraph};
use crate::llm::parse::{parse_sentiment_response, parse_thematic_response};
use crate::llm::prompt::{build_sentiment_prompt, build_thematic_prompt, PromptStyle};
use crate::llm::provider::{CompletionRequest, Provider, ProviderError, Throttled};
use crate::text::normalize_label;

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error("invalid annotator configuration: {0}")]
    InvalidConfig(String),
    #[error("provider unavailable: {0}")]
    ProviderUnavailable(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnotatorConfig {
    pub provider_id: String,
    pub model_name: String,
    pub temperature: f64,
    pub style: PromptStyle,
    pub seed: Option<u64>,
    pub max_retries: u32,
    pub max_in_flight: usize,
    pub min_interval_ms: u64,
    /// Defaults to `llm-themes` or `llm-sentiment`.
    pub run_id: Option<String>,
}

impl Default for AnnotatorConfig {
    fn default() -> Self {
        AnnotatorConfig {
            provider_id: "mock".into(),
            model_name: "gpt-4".into(),
            temperature: 0.5,
            style: PromptStyle::CoTThematic,
            seed: None,
            max_retries: 2,
            max_in_flight: 4,
            min_interval_ms: 0,
            run_id: None,
        }
    }
}

impl AnnotatorConfig {
    pub fn validate(&self) -> Result<(), AnnotateError> {
        if !(0.0..=1.0).contains(&self.temperature) {
            return Err(AnnotateError::InvalidConfig(format!(
                "temperature {} outside [0, 1]",
                self.temperature
            )));
        }
        if self.max_in_flight == 0 {
            return Err(AnnotateError::InvalidConfig("max_in_flight must be at least 1".into()));
        }
        Ok(())
    }

    pub fn kind(&self) -> RunKind {
        if self.style.is_thematic() {
            RunKind::Thematic
        } else {
            RunKind::Sentiment
        }
    }

    pub fn run_id(&self) -> String {
        self.run_id.clone().unwrap_or_else(|| match self.kind() {
            RunKind::Thematic => "llm-themes".into(),
            RunKind::Sentiment => "llm-sentiment".into(),
        })
    }
}

enum Outcome {
    Done(AnnotationRecord),
    Failed(String),
}

fn annotate_one(
    provider: &dyn Provider,
    p: &Paragraph,
    cb: &Codebook,
    config: &AnnotatorConfig,
) -> Result<Outcome, AnnotateError> {
    let prompt_text = match config.style {
        PromptStyle::Sentiment => build_sentiment_prompt(p),
        style => build_thematic_prompt(cb, p, style),
    };
    let request = CompletionRequest {
        model_name: config.model_name.clone(),
        temperature: config.temperature,
        prompt_text,
    };
    let mut last_error = String::new();
    for attempt in 0..=config.max_retries {
        if attempt > 0 {
            tracing::debug!("retrying {} (attempt {})", p.id, attempt + 1);
        }
        let raw = match provider.complete(&request) {
            Ok(r) => r.text,
            Err(ProviderError::Unavailable(m)) => return Err(AnnotateError::ProviderUnavailable(m)),
            Err(e) => {
                last_error = e.to_string();
                continue;
            }
        };
        let record = match config.style {
            PromptStyle::Sentiment => parse_sentiment_response(&raw).map(|s| AnnotationRecord {
                paragraph_id: p.id.clone(),
                labels: Vec::new(),
                sentiment: Some(s.label),
                reasoning: s.reasoning,
                raw_text: raw.clone(),
            }),
            _ => parse_thematic_response(&raw, cb).map(|t| AnnotationRecord {
                paragraph_id: p.id.clone(),
                labels: t.labels,
                sentiment: None,
                reasoning: t.reasoning,
                raw_text: raw.clone(),
            }),
        };
        match record {
            Ok(r) => return Ok(Outcome::Done(r)),
            Err(e) => last_error = e.to_string(),
        }
    }
    Ok(Outcome::Failed(last_error))
}

/// Annotate every paragraph, one request per paragraph, with at most
/// `max_in_flight` requests outstanding. Records come back in document
/// order; paragraphs that still fail after `max_retries` retries are listed
/// in `failures`.
pub fn annotate_corpus(
    provider: &dyn Provider,
    corpus: &Corpus,
    cb: &Codebook,
    config: &AnnotatorConfig,
) -> Result<AnnotationRun, AnnotateError> {
    config.validate()?;
    let throttled = Throttled::new(
        provider,
        config.max_in_flight,
        Duration::from_millis(config.min_interval_ms),
    );
    let n = corpus.len();
    let started_at = Utc::now();
    let results: Mutex<Vec<Option<Outcome>>> = Mutex::new((0..n).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let fatal: Mutex<Option<AnnotateError>> = Mutex::new(None);
    let workers = config.max_in_flight.min(n).max(1);

    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                if abort.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                match annotate_one(&throttled, &corpus.paragraphs[i], cb, config) {
                    Ok(outcome) => results.lock().expect("results lock")[i] = Some(outcome),
                    Err(e) => {
                        abort.store(true, Ordering::SeqCst);
                        fatal.lock().expect("error lock").get_or_insert(e);
                        break;
                    }
                }
            });
        }
    });

    if let Some(e) = fatal.into_inner().expect("error lock") {
        return Err(e);
    }
    let mut run = AnnotationRun::new(config.run_id(), Source::Llm, config.kind());
    run.config = serde_json::to_value(config).expect("config serializes");
    run.started_at = started_at;
    for (p, outcome) in corpus
        .paragraphs
        .iter()
        .zip(results.into_inner().expect("results lock"))
    {
        match outcome.expect("every paragraph visited") {
            Outcome::Done(r) => run.annotations.push(r),
            Outcome::Failed(error) => run.failures.push(Failure {
                paragraph_id: p.id.clone(),
                error,
            }),
        }
    }
    run.finished_at = Utc::now();
    Ok(run)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Normalized {
    Themes(BTreeSet<(CodeLevel, String)>),
    Sentiment(SentimentLabel),
}

fn normalized(r: &AnnotationRecord) -> Normalized {
    match r.sentiment {
        Some(s) => Normalized::Sentiment(s),
        None => Normalized::Themes(
            r.labels
                .iter()
                .map(|l| (l.level(), normalize_label(l.label())))
                .collect(),
        ),
    }
}

/// Sample `sample_size` paragraphs without replacement, annotate the sample
/// `repeats` times and return the fraction whose normalized label sets agree
/// across every repeat. A paragraph that fails in any repeat counts as not
/// reproducible.
pub fn reproducibility_check(
    provider: &dyn Provider,
    corpus: &Corpus,
    cb: &Codebook,
    config: &AnnotatorConfig,
    sample_size: usize,
    repeats: usize,
    rng_seed: u64,
) -> Result<f64, AnnotateError> {
    if sample_size == 0 || sample_size > corpus.len() {
        return Err(AnnotateError::InvalidConfig(format!(
            "sample size {sample_size} must be in 1..={}",
            corpus.len()
        )));
    }
    if repeats < 2 {
        return Err(AnnotateError::InvalidConfig("repeats must be at least 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut picked = rand::seq::index::sample(&mut rng, corpus.len(), sample_size).into_vec();
    picked.sort_unstable();
    let sample = Corpus::new(
        picked
            .iter()
            .map(|&i| corpus.paragraphs[i].clone())
            .collect(),
    )
    .expect("subset of a valid corpus");

    let mut seen: Vec<Option<Normalized>> = vec![None; sample.len()];
    let mut stable = vec![true; sample.len()];
    for _ in 0..repeats {
        let run = annotate_corpus(provider, &sample, cb, config)?;
        for (i, p) in sample.paragraphs.iter().enumerate() {
            match run.record(&p.id).map(normalized) {
                None => stable[i] = false,
                Some(v) => match &seen[i] {
                    None => seen[i] = Some(v),
                    Some(prev) if *prev != v => stable[i] = false,
                    Some(_) => {}
                },
            }
        }
    }
    Ok(stable.iter().filter(|&&s| s).count() as f64 / sample.len() as f64)
}
