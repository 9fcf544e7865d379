//! Local HTTP API over pipeline outputs and the adjudication log.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::annotation::{AnnotationRecord, AnnotationRun, RunKind, SentimentLabel, Source, MAX_LABELS};
use crate::codebook::{load_codebook, CodeRef, Codebook};
use crate::corpus::{load_corpus, Corpus, CorpusFormat, Paragraph, RoleGroup};
use crate::harmonize::{at_level, LabeledCorpus, Level};
use crate::metrics::{evaluate_sentiment, evaluate_thematic, EvalOptions, EvalSummary};
use crate::pipeline::{HUMAN_SENTIMENT, HUMAN_THEMES};

pub const ADJUDICATION_LOG: &str = "adjudications.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("cannot bind {addr}: {source}")]
    BindFailure { addr: String, source: std::io::Error },
    #[error("corrupt state in {path}: {message}")]
    CorruptState { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    AcceptMachine,
    AcceptHuman,
    Revised,
}

/// One line of the append-only adjudication log. The latest record for a
/// paragraph wins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjudicationRecord {
    pub paragraph_id: String,
    pub final_labels: Vec<CodeRef>,
    #[serde(default)]
    pub final_sentiment: Option<SentimentLabel>,
    pub adjudicator_id: String,
    pub decision: Decision,
    #[serde(default)]
    pub note: String,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueueLevel {
    Original,
    Parent,
    Sentiment,
}

impl FromStr for QueueLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "original" => Ok(QueueLevel::Original),
            "parent" => Ok(QueueLevel::Parent),
            "sentiment" => Ok(QueueLevel::Sentiment),
            other => Err(format!("unknown level `{other}` (original, parent or sentiment)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisagreementItem {
    pub paragraph_id: String,
    pub a_labels: Vec<CodeRef>,
    pub b_labels: Vec<CodeRef>,
    pub a_sentiment: Option<SentimentLabel>,
    pub b_sentiment: Option<SentimentLabel>,
    /// Size of the symmetric difference; 1 for a sentiment mismatch.
    pub symdiff: usize,
}

/// Paragraphs whose normalized label sets (or sentiments) differ, largest
/// symmetric difference first, ties in corpus order. Sentiment mode only
/// compares paragraphs both runs annotated.
pub fn disagreement_queue(
    a: &AnnotationRun,
    b: &AnnotationRun,
    corpus: &Corpus,
    cb: &Codebook,
    level: QueueLevel,
) -> anyhow::Result<Vec<DisagreementItem>> {
    let mut items = Vec::new();
    match level {
        QueueLevel::Sentiment => {
            let sa: HashMap<_, _> = a.sentiments().into_iter().collect();
            let sb: HashMap<_, _> = b.sentiments().into_iter().collect();
            for p in &corpus.paragraphs {
                if let (Some(x), Some(y)) = (sa.get(&p.id), sb.get(&p.id)) {
                    if x != y {
                        items.push(DisagreementItem {
                            paragraph_id: p.id.clone(),
                            a_labels: Vec::new(),
                            b_labels: Vec::new(),
                            a_sentiment: Some(*x),
                            b_sentiment: Some(*y),
                            symdiff: 1,
                        });
                    }
                }
            }
        }
        QueueLevel::Original | QueueLevel::Parent => {
            let lvl = if level == QueueLevel::Parent { Level::Parent } else { Level::Original };
            let la = at_level(&LabeledCorpus::from_run(a, corpus), cb, lvl)?;
            let lb = at_level(&LabeledCorpus::from_run(b, corpus), cb, lvl)?;
            for (i, id) in la.paragraph_ids.iter().enumerate() {
                let (x, y) = (&la.sets[i], &lb.sets[i]);
                let symdiff = x.iter().filter(|c| !y.contains(c)).count()
                    + y.iter().filter(|c| !x.contains(c)).count();
                if symdiff > 0 {
                    items.push(DisagreementItem {
                        paragraph_id: id.clone(),
                        a_labels: x.clone(),
                        b_labels: y.clone(),
                        a_sentiment: None,
                        b_sentiment: None,
                        symdiff,
                    });
                }
            }
        }
    }
    items.sort_by(|x, y| y.symdiff.cmp(&x.symdiff));
    Ok(items)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoldMode {
    Human,
    Adjudicated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldEntry {
    pub paragraph_id: String,
    pub labels: Vec<CodeRef>,
    pub sentiment: Option<SentimentLabel>,
    pub adjudicated: bool,
}

/// Human labels with the latest adjudication per paragraph applied on top.
/// An adjudication without a sentiment keeps the human sentiment.
pub fn gold_set(
    corpus: &Corpus,
    human_themes: Option<&AnnotationRun>,
    human_sentiment: Option<&AnnotationRun>,
    log: &[AdjudicationRecord],
    mode: GoldMode,
) -> Vec<GoldEntry> {
    let mut latest: HashMap<&str, &AdjudicationRecord> = HashMap::new();
    if mode == GoldMode::Adjudicated {
        for r in log {
            latest.insert(&r.paragraph_id, r);
        }
    }
    corpus
        .paragraphs
        .iter()
        .filter_map(|p| {
            let themes = human_themes.and_then(|r| r.record(&p.id)).map(|r| r.labels.clone());
            let sentiment = human_sentiment.and_then(|r| r.record(&p.id)).and_then(|r| r.sentiment);
            match latest.get(p.id.as_str()) {
                Some(a) => Some(GoldEntry {
                    paragraph_id: p.id.clone(),
                    labels: a.final_labels.clone(),
                    sentiment: a.final_sentiment.or(sentiment),
                    adjudicated: true,
                }),
                None if themes.is_some() || sentiment.is_some() => Some(GoldEntry {
                    paragraph_id: p.id.clone(),
                    labels: themes.unwrap_or_default(),
                    sentiment,
                    adjudicated: false,
                }),
                None => None,
            }
        })
        .collect()
}

/// Gold entries as a thematic run and a sentiment run for evaluation.
pub fn gold_runs(gold: &[GoldEntry], mode: GoldMode) -> (AnnotationRun, AnnotationRun) {
    let tag = match mode {
        GoldMode::Human => "human",
        GoldMode::Adjudicated => "adjudicated",
    };
    let mut themes = AnnotationRun::new(format!("gold-{tag}-themes"), Source::Human, RunKind::Thematic);
    let mut sent = AnnotationRun::new(format!("gold-{tag}-sentiment"), Source::Human, RunKind::Sentiment);
    for g in gold {
        let rec = |labels: Vec<CodeRef>, sentiment| AnnotationRecord {
            paragraph_id: g.paragraph_id.clone(),
            labels,
            sentiment,
            reasoning: String::new(),
            raw_text: String::new(),
        };
        themes.annotations.push(rec(g.labels.clone(), None));
        if g.sentiment.is_some() {
            sent.annotations.push(rec(Vec::new(), g.sentiment));
        }
    }
    (themes, sent)
}

/// Read an adjudication log; a missing file is an empty log.
pub fn load_adjudications(path: &Path) -> Result<Vec<AdjudicationRecord>, ServiceError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| ServiceError::CorruptState {
            path: path.display().to_string(),
            message: format!("line {}: {e}", i + 1),
        })?);
    }
    Ok(out)
}

struct AdjudicationLog {
    file: File,
    records: Vec<AdjudicationRecord>,
}

/// Everything the service serves. Runs are loaded once; the adjudication
/// log is the only mutable part.
pub struct ServiceState {
    pub state_dir: PathBuf,
    pub corpus: Corpus,
    pub codebook: Codebook,
    pub runs: BTreeMap<String, AnnotationRun>,
    log: RwLock<AdjudicationLog>,
}

fn corrupt(path: &Path, e: impl std::fmt::Display) -> ServiceError {
    ServiceError::CorruptState {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

impl ServiceState {
    pub fn load(state_dir: impl AsRef<Path>) -> Result<ServiceState, ServiceError> {
        let dir = state_dir.as_ref().to_path_buf();
        let cp = dir.join("corpus.jsonl");
        let corpus = load_corpus(&cp, CorpusFormat::Jsonl).map_err(|e| corrupt(&cp, e))?;
        let bp = dir.join("codebook.csv");
        let codebook = load_codebook(&bp).map_err(|e| corrupt(&bp, e))?;
        let mut runs = BTreeMap::new();
        let runs_dir = dir.join("runs");
        if runs_dir.is_dir() {
            for entry in fs::read_dir(&runs_dir)? {
                let p = entry?.path();
                if p.extension().and_then(|e| e.to_str()) != Some("jsonl") {
                    continue;
                }
                let run = AnnotationRun::load(&p).map_err(|e| corrupt(&p, e))?;
                runs.insert(run.run_id.clone(), run);
            }
        }
        let lp = dir.join(ADJUDICATION_LOG);
        let records = load_adjudications(&lp)?;
        for r in &records {
            validate_record(r, &corpus, &codebook).map_err(|e| corrupt(&lp, e.body.message))?;
        }
        let file = OpenOptions::new().create(true).append(true).open(&lp)?;
        Ok(ServiceState {
            state_dir: dir,
            corpus,
            codebook,
            runs,
            log: RwLock::new(AdjudicationLog { file, records }),
        })
    }

    pub fn adjudications(&self) -> Vec<AdjudicationRecord> {
        self.log.read().expect("log lock").records.clone()
    }

    /// Validate, append and fsync one record, then make it visible.
    pub fn adjudicate(&self, record: AdjudicationRecord) -> Result<AdjudicationRecord, ApiError> {
        let record = validate_record(&record, &self.corpus, &self.codebook)?;
        let mut line = serde_json::to_string(&record).expect("record serializes");
        line.push('\n');
        let mut log = self.log.write().expect("log lock");
        log.file
            .write_all(line.as_bytes())
            .and_then(|_| log.file.sync_data())
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "write_failed", e.to_string()))?;
        log.records.push(record.clone());
        Ok(record)
    }

    pub fn gold(&self, mode: GoldMode) -> Vec<GoldEntry> {
        let log = self.log.read().expect("log lock");
        gold_set(
            &self.corpus,
            self.runs.get(HUMAN_THEMES),
            self.runs.get(HUMAN_SENTIMENT),
            &log.records,
            mode,
        )
    }

    fn run(&self, id: &str) -> Result<&AnnotationRun, ApiError> {
        self.runs
            .get(id)
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_run", format!("no run `{id}`")))
    }
}

fn validate_record(
    r: &AdjudicationRecord,
    corpus: &Corpus,
    cb: &Codebook,
) -> Result<AdjudicationRecord, ApiError> {
    let bad = |code: &str, message: String| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, message);
    if corpus.get(&r.paragraph_id).is_none() {
        return Err(bad("unknown_paragraph", format!("no paragraph `{}`", r.paragraph_id)));
    }
    if r.adjudicator_id.trim().is_empty() {
        return Err(bad("missing_adjudicator", "adjudicator_id must not be empty".into()));
    }
    if r.final_labels.len() > MAX_LABELS {
        return Err(bad(
            "too_many_labels",
            format!("at most {MAX_LABELS} labels, got {}", r.final_labels.len()),
        ));
    }
    let mut labels: Vec<CodeRef> = Vec::new();
    for l in &r.final_labels {
        let c = cb
            .canonicalize(l)
            .map_err(|_| bad("invalid_label", format!("`{}` is not a {} code", l.label(), l.level())))?;
        if labels.contains(&c) {
            return Err(bad("duplicate_label", format!("`{}` listed twice", c.label())));
        }
        labels.push(c);
    }
    Ok(AdjudicationRecord {
        final_labels: labels,
        ..r.clone()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            body: ErrorBody {
                code: code.to_string(),
                message: message.into(),
            },
        }
    }

    fn query(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_query", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type Shared = Arc<ServiceState>;
type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Deserialize)]
struct ParagraphQuery {
    role: Option<String>,
}

async fn paragraphs(State(s): State<Shared>, Query(q): Query<ParagraphQuery>) -> ApiResult<Vec<Paragraph>> {
    let role = match q.role.as_deref() {
        Some(r) => Some(RoleGroup::from_str(r).map_err(|e| ApiError::query(e.to_string()))?),
        None => None,
    };
    Ok(Json(
        s.corpus
            .paragraphs
            .iter()
            .filter(|p| role.map_or(true, |r| p.role_group == r))
            .cloned()
            .collect(),
    ))
}

#[derive(Serialize)]
struct RunInfo {
    run_id: String,
    source: Source,
    kind: RunKind,
    annotations: usize,
    failures: usize,
    config: serde_json::Value,
}

async fn runs(State(s): State<Shared>) -> Json<Vec<RunInfo>> {
    Json(
        s.runs
            .values()
            .map(|r| RunInfo {
                run_id: r.run_id.clone(),
                source: r.source,
                kind: r.kind,
                annotations: r.annotations.len(),
                failures: r.failures.len(),
                config: r.config.clone(),
            })
            .collect(),
    )
}

async fn run_annotations(State(s): State<Shared>, UrlPath(id): UrlPath<String>) -> ApiResult<Vec<AnnotationRecord>> {
    Ok(Json(s.run(&id)?.annotations.clone()))
}

#[derive(Deserialize)]
struct DisagreementQuery {
    a: String,
    b: String,
    level: Option<String>,
}

async fn disagreements(
    State(s): State<Shared>,
    Query(q): Query<DisagreementQuery>,
) -> ApiResult<Vec<DisagreementItem>> {
    let level = q.level.as_deref().unwrap_or("original").parse().map_err(ApiError::query)?;
    let items = disagreement_queue(s.run(&q.a)?, s.run(&q.b)?, &s.corpus, &s.codebook, level)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_run", e.to_string()))?;
    Ok(Json(items))
}

/// Request body for POST /adjudications. Labels may be `{level, label}`
/// objects or bare strings resolved child-first; the timestamp defaults to
/// the time of receipt.
#[derive(Deserialize)]
struct AdjudicationInput {
    paragraph_id: String,
    #[serde(default)]
    final_labels: Vec<LabelInput>,
    #[serde(default)]
    final_sentiment: Option<SentimentLabel>,
    adjudicator_id: String,
    decision: Decision,
    #[serde(default)]
    note: String,
    #[serde(default)]
    timestamp: Option<DateTime<Utc>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LabelInput {
    Ref(CodeRef),
    Text(String),
}

async fn post_adjudication(State(s): State<Shared>, body: Bytes) -> Result<(StatusCode, Json<AdjudicationRecord>), ApiError> {
    let input: AdjudicationInput = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_body", e.to_string()))?;
    let mut labels = Vec::new();
    for l in input.final_labels {
        labels.push(match l {
            LabelInput::Ref(c) => c,
            LabelInput::Text(t) => s.codebook.resolve(&t).ok_or_else(|| {
                ApiError::new(
                    StatusCode::UNPROCESSABLE_ENTITY,
                    "invalid_label",
                    format!("`{t}` is not in the codebook"),
                )
            })?,
        });
    }
    let record = AdjudicationRecord {
        paragraph_id: input.paragraph_id,
        final_labels: labels,
        final_sentiment: input.final_sentiment,
        adjudicator_id: input.adjudicator_id,
        decision: input.decision,
        note: input.note,
        timestamp: input.timestamp.unwrap_or_else(Utc::now),
    };
    let state = s.clone();
    let stored = tokio::task::spawn_blocking(move || state.adjudicate(record))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    Ok((StatusCode::CREATED, Json(stored)))
}

#[derive(Deserialize)]
struct GoldQuery {
    mode: Option<GoldMode>,
}

async fn gold(State(s): State<Shared>, Query(q): Query<GoldQuery>) -> Json<Vec<GoldEntry>> {
    Json(s.gold(q.mode.unwrap_or(GoldMode::Adjudicated)))
}

#[derive(Deserialize)]
struct MetricsQuery {
    machine: String,
    gold: Option<GoldMode>,
    bootstrap_iters: Option<usize>,
    shuffle_repeats: Option<usize>,
    seed: Option<u64>,
}

async fn metrics(State(s): State<Shared>, Query(q): Query<MetricsQuery>) -> ApiResult<EvalSummary> {
    s.run(&q.machine)?;
    let state = s.clone();
    tokio::task::spawn_blocking(move || compute_metrics(&state, &q))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map(Json)
}

fn compute_metrics(s: &ServiceState, q: &MetricsQuery) -> Result<EvalSummary, ApiError> {
    let machine = s.run(&q.machine)?;
    let mode = q.gold.unwrap_or(GoldMode::Human);
    let d = EvalOptions::default();
    let opts = EvalOptions {
        bootstrap_iters: q.bootstrap_iters.unwrap_or(d.bootstrap_iters),
        shuffle_repeats: q.shuffle_repeats.unwrap_or(d.shuffle_repeats),
        seed: q.seed.unwrap_or(d.seed),
        ..d
    };
    let (themes, sent) = gold_runs(&s.gold(mode), mode);
    let fail = |e: String| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "metrics_failed", e);
    let mut summary = EvalSummary {
        options: Some(opts),
        ..Default::default()
    };
    match machine.kind {
        RunKind::Thematic => {
            for level in [Level::Original, Level::Parent] {
                summary.thematic.push(
                    evaluate_thematic(&s.corpus, &s.codebook, machine, &themes, level, &opts)
                        .map_err(|e| fail(e.to_string()))?,
                );
            }
        }
        RunKind::Sentiment => summary
            .sentiment
            .push(evaluate_sentiment(&s.corpus, machine, &sent, Some(&themes)).map_err(|e| fail(e.to_string()))?),
    }
    Ok(summary)
}

pub fn router(state: Arc<ServiceState>) -> Router {
    Router::new()
        .route("/paragraphs", get(paragraphs))
        .route("/runs", get(runs))
        .route("/runs/:id/annotations", get(run_annotations))
        .route("/disagreements", get(disagreements))
        .route("/adjudications", get(list_adjudications).post(post_adjudication))
        .route("/gold", get(gold))
        .route("/metrics", get(metrics))
        .with_state(state)
}

async fn list_adjudications(State(s): State<Shared>) -> Json<Vec<AdjudicationRecord>> {
    Json(s.adjudications())
}

/// Serve `state_dir` on `bind_addr` until ctrl-c.
pub async fn serve(state_dir: impl AsRef<Path>, bind_addr: SocketAddr) -> Result<(), ServiceError> {
    let state = Arc::new(ServiceState::load(state_dir)?);
    let listener = tokio::net::TcpListener::bind(bind_addr)
        .await
        .map_err(|source| ServiceError::BindFailure {
            addr: bind_addr.to_string(),
            source,
        })?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
