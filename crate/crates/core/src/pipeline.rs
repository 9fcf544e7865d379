//! Config-driven end-to-end pipeline with checkpointing and a
//! reproducibility manifest.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::annotation::{load_human_labels, AnnotationRun};
use crate::codebook::{load_codebook, Codebook};
use crate::corpus::{load_corpus, Corpus, CorpusFormat};
use crate::harmonize::{at_level, code_universe, one_hot, restrict, LabeledCorpus, Level};
use crate::lda::{
    annotate_corpus_lda, build_dtm, export_worksheet, fit_lda, search_k, DtmOptions, LdaConfig,
    SearchOptions, TopicLabelMap,
};
use crate::lexicon::{annotate_corpus_lexicon, load_lexicon, SentimentLexicon};
use crate::llm::{
    annotate_corpus, reproducibility_check, AnnotatorConfig, HttpProvider, KeywordMockProvider,
    PromptStyle, Provider,
};
use crate::metrics::{evaluate_sentiment, evaluate_thematic, EvalOptions, EvalSummary};
use crate::report::{
    frequency_by_role, frequency_table, sentiment_report, write_frequency_csv, write_sentiment_csv,
};

pub const HUMAN_THEMES: &str = "human-themes";
pub const HUMAN_SENTIMENT: &str = "human-sentiment";
pub const LLM_THEMES: &str = "llm-themes";
pub const LLM_SENTIMENT: &str = "llm-sentiment";
pub const LDA_THEMES: &str = "lda-themes";
pub const LEXICON_SENTIMENT: &str = "lexicon-sentiment";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub run: RunSection,
    pub ingest: IngestSection,
    #[serde(default)]
    pub llm: LlmSection,
    #[serde(default)]
    pub lda: LdaSection,
    #[serde(default)]
    pub lexicon: LexiconSection,
    #[serde(default)]
    pub evaluate: EvaluateSection,
    #[serde(default)]
    pub report: ReportSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestSection {
    pub corpus: PathBuf,
    #[serde(default)]
    pub format: Option<String>,
    pub codebook: PathBuf,
    #[serde(default)]
    pub human_labels: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmSection {
    pub enabled: bool,
    /// `mock` or `http`.
    pub provider: String,
    pub model: String,
    pub temperature: f64,
    pub style: PromptStyle,
    pub sentiment: bool,
    pub max_retries: u32,
    pub max_in_flight: usize,
    pub min_interval_ms: u64,
    pub endpoint: Option<String>,
    pub timeout_secs: u64,
    /// Paragraphs sampled for the reproducibility check; 0 skips it.
    pub repro_sample: usize,
    pub repro_repeats: usize,
}

impl Default for LlmSection {
    fn default() -> Self {
        LlmSection {
            enabled: true,
            provider: "mock".into(),
            model: "gpt-4".into(),
            temperature: 0.5,
            style: PromptStyle::CoTThematic,
            sentiment: true,
            max_retries: 2,
            max_in_flight: 4,
            min_interval_ms: 0,
            endpoint: None,
            timeout_secs: 120,
            repro_sample: 0,
            repro_repeats: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaSection {
    pub enabled: bool,
    pub k: usize,
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: Option<u64>,
    pub min_term_count: usize,
    /// Completed labeling worksheet; without it no LDA label sets are made.
    pub label_map: Option<PathBuf>,
    /// K values for the diagnostics sweep; empty skips it.
    pub k_list: Vec<usize>,
    pub holdout_fraction: f64,
}

impl Default for LdaSection {
    fn default() -> Self {
        let d = LdaConfig::default();
        LdaSection {
            enabled: false,
            k: d.k,
            alpha: None,
            beta: d.beta,
            iterations: d.iterations,
            burn_in: d.burn_in,
            seed: None,
            min_term_count: 2,
            label_map: None,
            k_list: Vec::new(),
            holdout_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LexiconSection {
    pub enabled: bool,
    pub valence: Option<PathBuf>,
    pub boosters: Option<PathBuf>,
    pub negators: Option<PathBuf>,
}

impl Default for LexiconSection {
    fn default() -> Self {
        LexiconSection {
            enabled: true,
            valence: None,
            boosters: None,
            negators: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub bootstrap_iters: usize,
    pub shuffle_repeats: usize,
    pub include_parent_only: bool,
    pub seed: Option<u64>,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        EvaluateSection {
            bootstrap_iters: 100,
            shuffle_repeats: 100,
            include_parent_only: true,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub group_by_role: bool,
}

impl Default for ReportSection {
    fn default() -> Self {
        ReportSection { group_by_role: true }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Config::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn lda_config(&self) -> LdaConfig {
        LdaConfig {
            k: self.lda.k,
            alpha: self.lda.alpha,
            beta: self.lda.beta,
            iterations: self.lda.iterations,
            burn_in: self.lda.burn_in,
            seed: self.lda.seed.unwrap_or(self.run.seed),
            ..LdaConfig::default()
        }
    }

    pub fn annotator_config(&self, style: PromptStyle) -> AnnotatorConfig {
        AnnotatorConfig {
            provider_id: self.llm.provider.clone(),
            model_name: self.llm.model.clone(),
            temperature: self.llm.temperature,
            style,
            seed: Some(self.run.seed),
            max_retries: self.llm.max_retries,
            max_in_flight: self.llm.max_in_flight,
            min_interval_ms: self.llm.min_interval_ms,
            run_id: None,
        }
    }

    pub fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            bootstrap_iters: self.evaluate.bootstrap_iters,
            shuffle_repeats: self.evaluate.shuffle_repeats,
            seed: self.evaluate.seed.unwrap_or(self.run.seed),
            include_parent_only: self.evaluate.include_parent_only,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Ingest,
    AnnotateLlm,
    AnnotateLda,
    AnnotateLexicon,
    Harmonize,
    Evaluate,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Ingest,
        Stage::AnnotateLlm,
        Stage::AnnotateLda,
        Stage::AnnotateLexicon,
        Stage::Harmonize,
        Stage::Evaluate,
        Stage::Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::AnnotateLlm => "annotate_llm",
            Stage::AnnotateLda => "annotate_lda",
            Stage::AnnotateLexicon => "annotate_lexicon",
            Stage::Harmonize => "harmonize",
            Stage::Evaluate => "evaluate",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s.replace('-', "_"))
            .ok_or_else(|| format!("unknown stage `{s}`"))
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Skip stages recorded as completed for the same config and inputs.
    pub resume: bool,
    /// Abort with an error just before this stage (recovery testing).
    pub fail_before: Option<Stage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Checkpoint {
    config_hash: String,
    completed: Vec<Stage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    /// Input path as written in the config → sha256.
    pub inputs: BTreeMap<String, String>,
    /// Output path relative to the output directory → sha256. Run files are
    /// hashed without their header line, which carries timestamps.
    pub outputs: BTreeMap<String, String>,
    pub stages: Vec<Stage>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Resolved locations for one pipeline invocation.
pub struct Workspace {
    pub base_dir: PathBuf,
    pub out_dir: PathBuf,
}

impl Workspace {
    pub fn new(config: &Config, config_path: &Path) -> Workspace {
        let base_dir = config_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        let out_dir = base_dir.join(&config.run.out_dir);
        Workspace { base_dir, out_dir }
    }

    pub fn input(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }

    pub fn out(&self, rel: &str) -> PathBuf {
        self.out_dir.join(rel)
    }

    pub fn run_path(&self, run_id: &str) -> PathBuf {
        self.out(&format!("runs/{run_id}.jsonl"))
    }

    pub fn corpus(&self) -> Result<Corpus> {
        Ok(load_corpus(self.out("corpus.jsonl"), CorpusFormat::Jsonl)?)
    }

    pub fn codebook(&self) -> Result<Codebook> {
        Ok(load_codebook(self.out("codebook.csv"))?)
    }

    pub fn run(&self, run_id: &str) -> Result<Option<AnnotationRun>> {
        let p = self.run_path(run_id);
        if !p.exists() {
            return Ok(None);
        }
        Ok(Some(AnnotationRun::load(&p)?))
    }

    fn write(&self, rel: &str, bytes: &[u8]) -> Result<()> {
        let p = self.out(rel);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))
    }

    fn save_run(&self, run: &AnnotationRun) -> Result<()> {
        fs::create_dir_all(self.out("runs"))?;
        Ok(run.save(self.run_path(&run.run_id))?)
    }
}

fn input_paths(config: &Config) -> Vec<PathBuf> {
    let mut v = vec![config.ingest.corpus.clone(), config.ingest.codebook.clone()];
    v.extend(config.ingest.human_labels.clone());
    if config.lda.enabled {
        v.extend(config.lda.label_map.clone());
    }
    if config.lexicon.enabled {
        v.extend(config.lexicon.valence.clone());
        v.extend(config.lexicon.boosters.clone());
        v.extend(config.lexicon.negators.clone());
    }
    v
}

fn input_hashes(config: &Config, ws: &Workspace) -> Result<BTreeMap<String, String>> {
    input_paths(config)
        .into_iter()
        .map(|p| {
            let bytes = fs::read(ws.input(&p)).with_context(|| format!("reading {}", p.display()))?;
            Ok((p.display().to_string(), sha256_hex(&bytes)))
        })
        .collect()
}

fn config_hash(config: &Config, inputs: &BTreeMap<String, String>) -> String {
    let v = serde_json::json!({ "config": config, "inputs": inputs });
    sha256_hex(v.to_string().as_bytes())
}

fn make_provider(config: &Config, cb: &Codebook) -> Result<Box<dyn Provider>> {
    match config.llm.provider.as_str() {
        "mock" => Ok(Box::new(KeywordMockProvider::new(cb))),
        "http" => Ok(Box::new(HttpProvider::from_env(
            config.llm.endpoint.as_deref(),
            Duration::from_secs(config.llm.timeout_secs),
        )?)),
        other => bail!("unknown provider `{other}` (expected `mock` or `http`)"),
    }
}

fn stage_ingest(config: &Config, ws: &Workspace) -> Result<()> {
    fs::create_dir_all(&ws.out_dir)?;
    let corpus_path = ws.input(&config.ingest.corpus);
    let format = match &config.ingest.format {
        Some(f) => f.parse::<CorpusFormat>()?,
        None => CorpusFormat::from_path(&corpus_path),
    };
    let corpus = load_corpus(&corpus_path, format)?;
    let cb = load_codebook(ws.input(&config.ingest.codebook))?;
    corpus.save(ws.out("corpus.jsonl"), CorpusFormat::Jsonl)?;
    ws.write("codebook.csv", cb.to_prompt_csv().as_bytes())?;
    if let Some(h) = &config.ingest.human_labels {
        let human = load_human_labels(ws.input(h), &cb, &corpus)?;
        ws.save_run(&human.themes)?;
        if let Some(s) = &human.sentiment {
            ws.save_run(s)?;
        }
    }
    Ok(())
}

fn stage_llm(config: &Config, ws: &Workspace) -> Result<()> {
    if !config.llm.enabled {
        return Ok(());
    }
    let corpus = ws.corpus()?;
    let cb = ws.codebook()?;
    let provider = make_provider(config, &cb)?;
    let theme_cfg = config.annotator_config(config.llm.style);
    let run = annotate_corpus(provider.as_ref(), &corpus, &cb, &theme_cfg)?;
    ws.save_run(&run)?;
    if config.llm.sentiment {
        let run = annotate_corpus(
            provider.as_ref(),
            &corpus,
            &cb,
            &config.annotator_config(PromptStyle::Sentiment),
        )?;
        ws.save_run(&run)?;
    }
    if config.llm.repro_sample > 0 {
        let n = config.llm.repro_sample.min(corpus.len());
        let fraction = reproducibility_check(
            provider.as_ref(),
            &corpus,
            &cb,
            &theme_cfg,
            n,
            config.llm.repro_repeats,
            config.run.seed,
        )?;
        let v = serde_json::json!({
            "sample_size": n,
            "repeats": config.llm.repro_repeats,
            "seed": config.run.seed,
            "fraction_reproducible": fraction,
        });
        ws.write("llm/repro.json", (serde_json::to_string_pretty(&v)? + "\n").as_bytes())?;
    }
    Ok(())
}

fn stage_lda(config: &Config, ws: &Workspace) -> Result<()> {
    if !config.lda.enabled {
        return Ok(());
    }
    let corpus = ws.corpus()?;
    let cb = ws.codebook()?;
    let opts = DtmOptions {
        min_term_count: config.lda.min_term_count,
        ..DtmOptions::default()
    };
    let dtm = build_dtm(&corpus, &opts)?;
    let cfg = config.lda_config();
    let model = fit_lda(&dtm, &cfg)?;
    ws.write("lda/model.json", serde_json::to_string(&model)?.as_bytes())?;
    let map = match &config.lda.label_map {
        Some(p) => {
            let f = fs::File::open(ws.input(p)).with_context(|| format!("opening {}", p.display()))?;
            Some(TopicLabelMap::from_worksheet(f, &cb)?)
        }
        None => None,
    };
    let mut sheet = Vec::new();
    export_worksheet(&model, 10, 20, map.as_ref(), &mut sheet)?;
    ws.write("lda/worksheet.csv", &sheet)?;
    if !config.lda.k_list.is_empty() {
        let rows = search_k(
            &dtm,
            &config.lda.k_list,
            &cfg,
            &SearchOptions {
                holdout_fraction: config.lda.holdout_fraction,
                ..SearchOptions::default()
            },
        )?;
        let mut buf = Vec::new();
        crate::lda::write_diagnostics_csv(&rows, &mut buf)?;
        ws.write("lda/diagnostics.csv", &buf)?;
    }
    if let Some(map) = map {
        ws.save_run(&annotate_corpus_lda(&model, &map, LDA_THEMES))?;
    } else {
        tracing::info!("no topic label map configured; fill in lda/worksheet.csv to produce LDA labels");
    }
    Ok(())
}

fn stage_lexicon(config: &Config, ws: &Workspace) -> Result<()> {
    if !config.lexicon.enabled {
        return Ok(());
    }
    let l = &config.lexicon;
    let lex = match (&l.valence, &l.boosters, &l.negators) {
        (None, None, None) => SentimentLexicon::bundled(),
        (Some(v), Some(b), Some(n)) => load_lexicon(ws.input(v), ws.input(b), ws.input(n))?,
        _ => bail!("lexicon paths must be given all together (valence, boosters, negators) or not at all"),
    };
    let corpus = ws.corpus()?;
    ws.save_run(&annotate_corpus_lexicon(&lex, &corpus, LEXICON_SENTIMENT))?;
    Ok(())
}

fn thematic_runs(ws: &Workspace) -> Result<Vec<AnnotationRun>> {
    let mut out = Vec::new();
    for id in [HUMAN_THEMES, LLM_THEMES, LDA_THEMES] {
        if let Some(r) = ws.run(id)? {
            out.push(r);
        }
    }
    Ok(out)
}

fn stage_harmonize(config: &Config, ws: &Workspace) -> Result<()> {
    let corpus = ws.corpus()?;
    let cb = ws.codebook()?;
    for run in thematic_runs(ws)? {
        run.validate(&cb)?;
        let lc = LabeledCorpus::from_run(&run, &corpus);
        for level in [Level::Original, Level::Parent] {
            let universe = code_universe(&cb, level, config.evaluate.include_parent_only);
            let m = one_hot(&restrict(&at_level(&lc, &cb, level)?, &universe), &universe)?;
            let mut buf = Vec::new();
            m.write_csv(&mut buf)?;
            ws.write(&format!("labels/{}-{}.csv", run.run_id, level.as_str()), &buf)?;
        }
    }
    Ok(())
}

fn stage_evaluate(config: &Config, ws: &Workspace) -> Result<()> {
    let corpus = ws.corpus()?;
    let cb = ws.codebook()?;
    let opts = config.eval_options();
    let mut summary = EvalSummary {
        options: Some(opts),
        ..Default::default()
    };
    let human_themes = ws.run(HUMAN_THEMES)?;
    if let Some(human) = &human_themes {
        for id in [LLM_THEMES, LDA_THEMES] {
            if let Some(machine) = ws.run(id)? {
                for level in [Level::Original, Level::Parent] {
                    summary
                        .thematic
                        .push(evaluate_thematic(&corpus, &cb, &machine, human, level, &opts)?);
                }
            }
        }
    }
    if let Some(human) = ws.run(HUMAN_SENTIMENT)? {
        for id in [LLM_SENTIMENT, LEXICON_SENTIMENT] {
            if let Some(machine) = ws.run(id)? {
                summary
                    .sentiment
                    .push(evaluate_sentiment(&corpus, &machine, &human, human_themes.as_ref())?);
            }
        }
    }
    ws.write("eval/report.json", summary.to_json().as_bytes())?;
    let mut buf = Vec::new();
    summary.write_csv(&mut buf)?;
    ws.write("eval/report.csv", &buf)?;
    Ok(())
}

fn stage_report(config: &Config, ws: &Workspace) -> Result<()> {
    let corpus = ws.corpus()?;
    let cb = ws.codebook()?;
    let themes = thematic_runs(ws)?;
    for run in &themes {
        let lc = LabeledCorpus::from_run(run, &corpus);
        let overall = frequency_table(&lc, &cb);
        let by_role = if config.report.group_by_role {
            frequency_by_role(&lc, &cb, &corpus)
        } else {
            Vec::new()
        };
        let mut tables = vec![("All".to_string(), &overall)];
        tables.extend(by_role.iter().map(|(r, t)| (r.as_str().to_string(), t)));
        let mut buf = Vec::new();
        write_frequency_csv(&tables, &mut buf)?;
        ws.write(&format!("reports/frequency-{}.csv", run.run_id), &buf)?;
    }
    let human_themes = themes.iter().find(|r| r.run_id == HUMAN_THEMES);
    for id in [HUMAN_SENTIMENT, LLM_SENTIMENT, LEXICON_SENTIMENT] {
        let (Some(sent), Some(ht)) = (ws.run(id)?, human_themes) else {
            continue;
        };
        let lc = LabeledCorpus::from_run(ht, &corpus);
        let mut rows = Vec::new();
        for level in [Level::Original, Level::Parent] {
            let group_corpus = config.report.group_by_role.then_some(&corpus);
            rows.extend(sentiment_report(&sent.sentiments(), &at_level(&lc, &cb, level)?, group_corpus));
        }
        let mut buf = Vec::new();
        write_sentiment_csv(&rows, &mut buf)?;
        ws.write(&format!("reports/sentiment-{id}.csv"), &buf)?;
    }
    Ok(())
}

fn run_stage(stage: Stage, config: &Config, ws: &Workspace) -> Result<()> {
    match stage {
        Stage::Ingest => stage_ingest(config, ws),
        Stage::AnnotateLlm => stage_llm(config, ws),
        Stage::AnnotateLda => stage_lda(config, ws),
        Stage::AnnotateLexicon => stage_lexicon(config, ws),
        Stage::Harmonize => stage_harmonize(config, ws),
        Stage::Evaluate => stage_evaluate(config, ws),
        Stage::Report => stage_report(config, ws),
    }
}

fn collect_outputs(ws: &Workspace) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![ws.out_dir.clone()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
                continue;
            }
            let rel = path
                .strip_prefix(&ws.out_dir)
                .expect("inside out dir")
                .to_string_lossy()
                .replace('\\', "/");
            if rel == "manifest.json" || rel == "checkpoint.json" || rel == "adjudications.jsonl" {
                continue;
            }
            let bytes = fs::read(&path)?;
            let hashed: &[u8] = if rel.starts_with("runs/") {
                match bytes.iter().position(|&b| b == b'\n') {
                    Some(i) => &bytes[i + 1..],
                    None => &[],
                }
            } else {
                &bytes
            };
            out.insert(rel, sha256_hex(hashed));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub out_dir: PathBuf,
    pub executed: Vec<Stage>,
    pub skipped: Vec<Stage>,
    pub manifest: Manifest,
}

/// Run every stage in order. Stage outputs are read back from the output
/// directory by later stages, so a resumed run produces the same files as
/// an uninterrupted one.
pub fn run_pipeline(config_path: &Path, opts: &RunOptions) -> Result<PipelineOutcome> {
    let config = Config::load(config_path)?;
    run_pipeline_with(&config, config_path, opts)
}

pub fn run_pipeline_with(config: &Config, config_path: &Path, opts: &RunOptions) -> Result<PipelineOutcome> {
    let ws = Workspace::new(config, config_path);
    let inputs = input_hashes(config, &ws)?;
    let hash = config_hash(config, &inputs);
    fs::create_dir_all(&ws.out_dir)?;
    let ckpt_path = ws.out("checkpoint.json");
    let mut ckpt = Checkpoint {
        config_hash: hash.clone(),
        completed: Vec::new(),
    };
    if opts.resume && ckpt_path.exists() {
        let prev: Checkpoint = serde_json::from_slice(&fs::read(&ckpt_path)?)?;
        if prev.config_hash == hash {
            ckpt = prev;
        } else {
            tracing::warn!("config or inputs changed since the checkpoint; running all stages");
        }
    }
    let mut executed = Vec::new();
    let mut skipped = Vec::new();
    for stage in Stage::ALL {
        if ckpt.completed.contains(&stage) {
            skipped.push(stage);
            continue;
        }
        if opts.fail_before == Some(stage) {
            bail!("stopped before stage `{stage}` as requested; rerun with resume to continue");
        }
        tracing::info!("stage {stage}");
        run_stage(stage, config, &ws).with_context(|| format!("stage `{stage}` failed"))?;
        ckpt.completed.push(stage);
        fs::write(&ckpt_path, serde_json::to_string_pretty(&ckpt)?)?;
        executed.push(stage);
    }

    let mut seeds = BTreeMap::new();
    seeds.insert("run".to_string(), config.run.seed);
    seeds.insert("lda".to_string(), config.lda_config().seed);
    seeds.insert("evaluate".to_string(), config.eval_options().seed);
    let manifest = Manifest {
        config: serde_json::to_value(config)?,
        seeds,
        inputs,
        outputs: collect_outputs(&ws)?,
        stages: Stage::ALL.to_vec(),
    };
    ws.write("manifest.json", (serde_json::to_string_pretty(&manifest)? + "\n").as_bytes())?;
    Ok(PipelineOutcome {
        out_dir: ws.out_dir,
        executed,
        skipped,
        manifest,
    })
}

