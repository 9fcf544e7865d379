//! Annotation records shared by every source (human, LLM, LDA, lexicon) and
//! the JSONL run format.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codebook::{CodeRef, Codebook};
use crate::corpus::Corpus;

/// Maximum number of theme labels per paragraph.
pub const MAX_LABELS: usize = 3;

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("paragraph `{id}` has {n} labels (at most {MAX_LABELS} allowed)")]
    TooManyLabels { id: String, n: usize },
    #[error("paragraph `{id}` lists label `{label}` twice")]
    DuplicateLabel { id: String, label: String },
    #[error("label `{label}` for paragraph `{id}` is not in the codebook")]
    UnknownLabel { id: String, label: String },
    #[error("unknown sentiment `{0}`")]
    UnknownSentiment(String),
    #[error("paragraph `{0}` is not in the corpus")]
    UnknownParagraph(String),
    #[error("run file {path}: {message}")]
    Format { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, AnnotationError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Human,
    Llm,
    Lda,
    Lexicon,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Human => "human",
            Source::Llm => "llm",
            Source::Lda => "lda",
            Source::Lexicon => "lexicon",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SentimentLabel {
    Positive,
    Negative,
    Neutral,
}

impl SentimentLabel {
    /// Row/column order used by confusion matrices.
    pub const ALL: [SentimentLabel; 3] = [
        SentimentLabel::Positive,
        SentimentLabel::Negative,
        SentimentLabel::Neutral,
    ];

    pub fn index(self) -> usize {
        match self {
            SentimentLabel::Positive => 0,
            SentimentLabel::Negative => 1,
            SentimentLabel::Neutral => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SentimentLabel::Positive => "Positive",
            SentimentLabel::Negative => "Negative",
            SentimentLabel::Neutral => "Neutral",
        }
    }
}

impl fmt::Display for SentimentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SentimentLabel {
    type Err = AnnotationError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "positive" => Ok(SentimentLabel::Positive),
            "negative" => Ok(SentimentLabel::Negative),
            "neutral" => Ok(SentimentLabel::Neutral),
            _ => Err(AnnotationError::UnknownSentiment(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunKind {
    Thematic,
    Sentiment,
}

/// Up to three theme labels for one paragraph from one source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThemeLabelSet {
    pub paragraph_id: String,
    pub labels: Vec<CodeRef>,
    pub reasoning: String,
    pub source: Source,
    pub run_id: String,
}

impl ThemeLabelSet {
    pub fn validate(&self) -> Result<()> {
        validate_labels(&self.paragraph_id, &self.labels)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentAnnotation {
    pub paragraph_id: String,
    pub label: SentimentLabel,
    pub reasoning: String,
    pub source: Source,
    pub run_id: String,
}

pub(crate) fn validate_labels(id: &str, labels: &[CodeRef]) -> Result<()> {
    if labels.len() > MAX_LABELS {
        return Err(AnnotationError::TooManyLabels {
            id: id.to_string(),
            n: labels.len(),
        });
    }
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(AnnotationError::DuplicateLabel {
                id: id.to_string(),
                label: l.label().to_string(),
            });
        }
    }
    Ok(())
}

/// One line of a run file: a paragraph's labels or sentiment together with
/// the verbatim source output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub paragraph_id: String,
    #[serde(default)]
    pub labels: Vec<CodeRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentiment: Option<SentimentLabel>,
    #[serde(default)]
    pub reasoning: String,
    #[serde(default)]
    pub raw_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub paragraph_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRun {
    pub run_id: String,
    pub source: Source,
    pub kind: RunKind,
    /// Provenance configuration (annotator settings, model hyperparameters...).
    pub config: serde_json::Value,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    pub failures: Vec<Failure>,
    pub annotations: Vec<AnnotationRecord>,
}

#[derive(Serialize, Deserialize)]
struct RunHeader {
    #[serde(rename = "type")]
    kind_tag: String,
    run_id: String,
    source: Source,
    kind: RunKind,
    config: serde_json::Value,
    started_at: DateTime<Utc>,
    finished_at: DateTime<Utc>,
    failures: Vec<Failure>,
}

impl AnnotationRun {
    pub fn new(run_id: impl Into<String>, source: Source, kind: RunKind) -> Self {
        let now = Utc::now();
        AnnotationRun {
            run_id: run_id.into(),
            source,
            kind,
            config: serde_json::Value::Null,
            started_at: now,
            finished_at: now,
            failures: Vec::new(),
            annotations: Vec::new(),
        }
    }

    pub fn record(&self, paragraph_id: &str) -> Option<&AnnotationRecord> {
        self.annotations.iter().find(|a| a.paragraph_id == paragraph_id)
    }

    /// Paragraph id → sentiment, in record order.
    pub fn sentiments(&self) -> Vec<(String, SentimentLabel)> {
        self.annotations
            .iter()
            .filter_map(|a| a.sentiment.map(|s| (a.paragraph_id.clone(), s)))
            .collect()
    }

    pub fn theme_sets(&self) -> Vec<ThemeLabelSet> {
        self.annotations
            .iter()
            .map(|a| ThemeLabelSet {
                paragraph_id: a.paragraph_id.clone(),
                labels: a.labels.clone(),
                reasoning: a.reasoning.clone(),
                source: self.source,
                run_id: self.run_id.clone(),
            })
            .collect()
    }

    /// Validate label-set invariants, codebook membership and one record per
    /// paragraph.
    pub fn validate(&self, cb: &Codebook) -> Result<()> {
        let mut seen = HashSet::new();
        for a in &self.annotations {
            if !seen.insert(a.paragraph_id.as_str()) {
                return Err(AnnotationError::Format {
                    path: self.run_id.clone(),
                    message: format!("paragraph `{}` annotated twice", a.paragraph_id),
                });
            }
            validate_labels(&a.paragraph_id, &a.labels)?;
            for l in &a.labels {
                if !cb.contains(l) {
                    return Err(AnnotationError::UnknownLabel {
                        id: a.paragraph_id.clone(),
                        label: l.label().to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> std::io::Result<()> {
        let header = RunHeader {
            kind_tag: "header".into(),
            run_id: self.run_id.clone(),
            source: self.source,
            kind: self.kind,
            config: self.config.clone(),
            started_at: self.started_at,
            finished_at: self.finished_at,
            failures: self.failures.clone(),
        };
        writeln!(out, "{}", serde_json::to_string(&header)?)?;
        for a in &self.annotations {
            writeln!(out, "{}", serde_json::to_string(a)?)?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path.as_ref())?);
        self.write_jsonl(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<AnnotationRun> {
        let path = path.as_ref();
        let fmt_err = |message: String| AnnotationError::Format {
            path: path.display().to_string(),
            message,
        };
        let reader = BufReader::new(File::open(path)?);
        let mut lines = reader.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| fmt_err("empty run file".into()))??;
        let header: RunHeader =
            serde_json::from_str(&header_line).map_err(|e| fmt_err(format!("header: {e}")))?;
        if header.kind_tag != "header" {
            return Err(fmt_err("first line is not a run header".into()));
        }
        let mut annotations = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: AnnotationRecord = serde_json::from_str(&line)
                .map_err(|e| fmt_err(format!("line {}: {e}", n + 2)))?;
            annotations.push(rec);
        }
        Ok(AnnotationRun {
            run_id: header.run_id,
            source: header.source,
            kind: header.kind,
            config: header.config,
            started_at: header.started_at,
            finished_at: header.finished_at,
            failures: header.failures,
            annotations,
        })
    }
}

/// Human gold labels loaded from `paragraph_id,label_1,label_2,label_3,sentiment`.
#[derive(Debug, Clone)]
pub struct HumanLabels {
    pub themes: AnnotationRun,
    pub sentiment: Option<AnnotationRun>,
}

/// Load human gold labels. Theme cells resolve against child labels first,
/// then parent labels; the sentiment column is optional.
pub fn load_human_labels(
    path: impl AsRef<Path>,
    cb: &Codebook,
    corpus: &Corpus,
) -> Result<HumanLabels> {
    let path = path.as_ref();
    let fmt_err = |message: String| AnnotationError::Format {
        path: path.display().to_string(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| fmt_err(e.to_string()))?;
    let headers = reader.headers().map_err(|e| fmt_err(e.to_string()))?.clone();
    let pos = |name: &str| headers.iter().position(|h| h.trim() == name);
    let id_col = pos("paragraph_id").ok_or_else(|| fmt_err("missing `paragraph_id`".into()))?;
    let label_cols: Vec<usize> = (1..=MAX_LABELS)
        .filter_map(|i| pos(&format!("label_{i}")))
        .collect();
    let sent_col = pos("sentiment");

    let mut by_id: BTreeMap<String, (Vec<CodeRef>, Option<SentimentLabel>)> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| fmt_err(e.to_string()))?;
        let id = record.get(id_col).unwrap_or("").trim().to_string();
        if corpus.get(&id).is_none() {
            return Err(AnnotationError::UnknownParagraph(id));
        }
        let mut labels = Vec::new();
        for &c in &label_cols {
            let cell = record.get(c).unwrap_or("").trim();
            if cell.is_empty() {
                continue;
            }
            let code = cb.resolve(cell).ok_or_else(|| AnnotationError::UnknownLabel {
                id: id.clone(),
                label: cell.to_string(),
            })?;
            labels.push(code);
        }
        validate_labels(&id, &labels)?;
        let sentiment = match sent_col.map(|c| record.get(c).unwrap_or("").trim()) {
            Some(s) if !s.is_empty() => Some(s.parse()?),
            _ => None,
        };
        if by_id.insert(id.clone(), (labels, sentiment)).is_some() {
            return Err(fmt_err(format!("paragraph `{id}` listed twice")));
        }
    }

    let mut themes = AnnotationRun::new("human-themes", Source::Human, RunKind::Thematic);
    themes.config = serde_json::json!({ "path": path.display().to_string() });
    let mut sentiment = AnnotationRun::new("human-sentiment", Source::Human, RunKind::Sentiment);
    sentiment.config = themes.config.clone();
    for p in &corpus.paragraphs {
        if let Some((labels, sent)) = by_id.get(&p.id) {
            themes.annotations.push(AnnotationRecord {
                paragraph_id: p.id.clone(),
                labels: labels.clone(),
                sentiment: None,
                reasoning: String::new(),
                raw_text: String::new(),
            });
            if let Some(s) = sent {
                sentiment.annotations.push(AnnotationRecord {
                    paragraph_id: p.id.clone(),
                    labels: Vec::new(),
                    sentiment: Some(*s),
                    reasoning: String::new(),
                    raw_text: String::new(),
                });
            }
        }
    }
    let sentiment = (!sentiment.annotations.is_empty()).then_some(sentiment);
    Ok(HumanLabels { themes, sentiment })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sentiment_parse_is_case_insensitive() {
        assert_eq!("NEUTRAL".parse::<SentimentLabel>().unwrap(), SentimentLabel::Neutral);
        assert!(matches!(
            "mixed".parse::<SentimentLabel>(),
            Err(AnnotationError::UnknownSentiment(_))
        ));
    }

    #[test]
    fn label_set_validation() {
        let a = CodeRef::Child("a".into());
        assert!(validate_labels("p", &[a.clone(), a.clone()]).is_err());
        let four: Vec<_> = (0..4).map(|i| CodeRef::Child(i.to_string())).collect();
        assert!(matches!(
            validate_labels("p", &four),
            Err(AnnotationError::TooManyLabels { n: 4, .. })
        ));
    }

    #[test]
    fn run_jsonl_round_trip() {
        let mut run = AnnotationRun::new("r1", Source::Llm, RunKind::Thematic);
        run.config = serde_json::json!({"temperature": 0.5});
        run.failures.push(Failure {
            paragraph_id: "p9".into(),
            error: "no json".into(),
        });
        run.annotations.push(AnnotationRecord {
            paragraph_id: "p1".into(),
            labels: vec![CodeRef::Parent("School finance".into())],
            sentiment: None,
            reasoning: "r".into(),
            raw_text: "{\"Parent 1\": \"School finance\"}".into(),
        });
        let f = tempfile::NamedTempFile::new().unwrap();
        run.save(f.path()).unwrap();
        let back = AnnotationRun::load(f.path()).unwrap();
        assert_eq!(back, run);
        let text = std::fs::read_to_string(f.path()).unwrap();
        assert!(text
            .lines()
            .nth(1)
            .unwrap()
            .contains(r#""labels":[{"level":"parent","label":"School finance"}]"#));
    }
}
