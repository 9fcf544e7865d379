use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use voicelens::annotation::AnnotationRun;
use voicelens::codebook::{load_codebook, Codebook};
use voicelens::corpus::{load_corpus, Corpus, CorpusFormat};
use voicelens::harmonize::{LabeledCorpus, Level};
use voicelens::lda::{
    annotate_corpus_lda, build_dtm, export_worksheet, fit_lda, search_k, write_diagnostics_csv, DtmOptions,
    LdaConfig, SearchOptions, TopicLabelMap, TopicModel,
};
use voicelens::lexicon::{annotate_corpus_lexicon, load_lexicon, SentimentLexicon};
use voicelens::llm::{
    annotate_corpus, reproducibility_check, AnnotatorConfig, HttpProvider, KeywordMockProvider, PromptStyle,
    Provider,
};
use voicelens::metrics::{evaluate_sentiment, evaluate_thematic, EvalOptions, EvalSummary};
use voicelens::pipeline::{run_pipeline, RunOptions, Stage};
use voicelens::report::{frequency_by_role, frequency_table, write_frequency_csv};

#[derive(Parser)]
#[command(name = "voicelens", version, about = "Qualitative coding with LLM, LDA and lexicon annotators")]
struct Cli {
    /// Log filter, e.g. `info` or `voicelens=debug`.
    #[arg(long, global = true, default_value = "info")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a corpus and write it as JSONL.
    Ingest {
        corpus: PathBuf,
        #[arg(long)]
        format: Option<String>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Codebook utilities.
    Codebook {
        #[command(subcommand)]
        command: CodebookCommand,
    },
    /// Produce an annotation run.
    Annotate {
        #[command(subcommand)]
        command: AnnotateCommand,
    },
    /// Topic labeling worksheet round trip.
    LabelTopics {
        #[command(subcommand)]
        command: LabelCommand,
    },
    /// Compare a machine run against a reference run.
    Evaluate(EvaluateArgs),
    /// Code frequency tables for a thematic run.
    Report {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        by_role: bool,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Re-annotate a random sample and report the reproducible fraction.
    ReproCheck {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        llm: LlmArgs,
        #[arg(long, default_value_t = 100)]
        sample: usize,
        #[arg(long, default_value_t = 2)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Serve pipeline outputs and the adjudication API.
    Serve {
        state_dir: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
    },
    /// Run the full pipeline from a TOML config.
    Run {
        #[arg(long, short)]
        config: PathBuf,
        #[arg(long)]
        resume: bool,
        /// Stop before the named stage (for testing resume).
        #[arg(long, hide = true)]
        fail_before: Option<String>,
    },
}

#[derive(Subcommand)]
enum CodebookCommand {
    /// Validate a codebook and print a summary.
    Check { path: PathBuf },
}

#[derive(Args)]
struct Inputs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    codebook: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProviderKind {
    Mock,
    Http,
}

#[derive(Clone, Copy, ValueEnum)]
enum StyleArg {
    Cot,
    ZeroShot,
    Sentiment,
}

impl From<StyleArg> for PromptStyle {
    fn from(s: StyleArg) -> Self {
        match s {
            StyleArg::Cot => PromptStyle::CoTThematic,
            StyleArg::ZeroShot => PromptStyle::ZeroShotThematic,
            StyleArg::Sentiment => PromptStyle::Sentiment,
        }
    }
}

#[derive(Args)]
struct LlmArgs {
    #[arg(long, value_enum, default_value = "mock")]
    provider: ProviderKind,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long, default_value = "gpt-4")]
    model: String,
    #[arg(long, default_value_t = 0.5)]
    temperature: f64,
    #[arg(long, value_enum, default_value = "cot")]
    style: StyleArg,
    #[arg(long, default_value_t = 2)]
    max_retries: u32,
    #[arg(long, default_value_t = 4)]
    max_in_flight: usize,
    #[arg(long, default_value_t = 0)]
    min_interval_ms: u64,
    #[arg(long, default_value_t = 120)]
    timeout_secs: u64,
}

impl LlmArgs {
    fn provider(&self, cb: &Codebook) -> Result<Box<dyn Provider>> {
        Ok(match self.provider {
            ProviderKind::Mock => Box::new(KeywordMockProvider::new(cb)),
            ProviderKind::Http => Box::new(HttpProvider::from_env(
                self.endpoint.as_deref(),
                Duration::from_secs(self.timeout_secs),
            )?),
        })
    }

    fn config(&self, run_id: Option<String>) -> AnnotatorConfig {
        AnnotatorConfig {
            provider_id: match self.provider {
                ProviderKind::Mock => "mock".into(),
                ProviderKind::Http => "http".into(),
            },
            model_name: self.model.clone(),
            temperature: self.temperature,
            style: self.style.into(),
            seed: None,
            max_retries: self.max_retries,
            max_in_flight: self.max_in_flight,
            min_interval_ms: self.min_interval_ms,
            run_id,
        }
    }
}

#[derive(Subcommand)]
enum AnnotateCommand {
    /// Annotate with an LLM provider.
    Llm {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        llm: LlmArgs,
        #[arg(long)]
        run_id: Option<String>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Fit LDA; writes the model, worksheet and optional diagnostics, and a
    /// run when a label map is given.
    Lda {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, default_value_t = 30)]
        k: usize,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        beta: f64,
        #[arg(long, default_value_t = 2000)]
        iterations: usize,
        #[arg(long, default_value_t = 1000)]
        burn_in: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        min_term_count: usize,
        /// Comma-separated K values for the diagnostics sweep.
        #[arg(long, value_delimiter = ',')]
        k_list: Vec<usize>,
        #[arg(long)]
        label_map: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Score sentiment with the lexicon.
    Lexicon {
        #[arg(long)]
        corpus: PathBuf,
        /// Custom lexicon: valence, boosters and negators files.
        #[arg(long, num_args = 3, value_names = ["VALENCE", "BOOSTERS", "NEGATORS"])]
        lexicon: Option<Vec<PathBuf>>,
        #[arg(long, default_value = "lexicon-sentiment")]
        run_id: String,
        #[arg(long, short)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum LabelCommand {
    /// Write a blank (or pre-filled) worksheet for a fitted model.
    Export {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        existing: Option<PathBuf>,
        #[arg(long)]
        codebook: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        words: usize,
        #[arg(long, default_value_t = 20)]
        docs: usize,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Turn a completed worksheet into an LDA annotation run.
    Import {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        worksheet: PathBuf,
        #[arg(long)]
        codebook: PathBuf,
        #[arg(long, default_value = "lda-themes")]
        run_id: String,
        #[arg(long, short)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long)]
    machine: PathBuf,
    #[arg(long)]
    reference: PathBuf,
    /// Human thematic run, for sentiment agreement by theme.
    #[arg(long)]
    reference_themes: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    bootstrap_iters: usize,
    #[arg(long, default_value_t = 100)]
    shuffle_repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    exclude_parent_only: bool,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn corpus_from(path: &Path) -> Result<Corpus> {
    Ok(load_corpus(path, CorpusFormat::from_path(path)).with_context(|| format!("loading {}", path.display()))?)
}

fn load_inputs(i: &Inputs) -> Result<(Corpus, Codebook)> {
    Ok((corpus_from(&i.corpus)?, load_codebook(&i.codebook)?))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?))
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn save_run(run: &AnnotationRun, out: &Path) -> Result<()> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    run.save(out)?;
    eprintln!(
        "{}: {} annotations, {} failures -> {}",
        run.run_id,
        run.annotations.len(),
        run.failures.len(),
        out.display()
    );
    Ok(())
}

fn read_model(path: &Path) -> Result<TopicModel> {
    Ok(serde_json::from_slice(&fs::read(path).with_context(|| format!("reading {}", path.display()))?)?)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::new(&cli.log))
        .with_writer(io::stderr)
        .init();
    match cli.command {
        Command::Ingest { corpus, format, out } => {
            let fmt = match format {
                Some(f) => f.parse()?,
                None => CorpusFormat::from_path(&corpus),
            };
            let c = load_corpus(&corpus, fmt)?;
            c.save(&out, CorpusFormat::from_path(&out))?;
            eprintln!("{} paragraphs -> {}", c.len(), out.display());
        }
        Command::Codebook {
            command: CodebookCommand::Check { path },
        } => {
            let cb = load_codebook(&path)?;
            println!("{} parents, {} children", cb.parents().len(), cb.children().len());
            for p in cb.parents() {
                println!("{p}: {}", cb.children_of(p).count());
            }
        }
        Command::Annotate { command } => annotate(command)?,
        Command::LabelTopics { command } => label_topics(command)?,
        Command::Evaluate(args) => evaluate(args)?,
        Command::Report {
            inputs,
            run,
            by_role,
            out,
        } => {
            let (corpus, cb) = load_inputs(&inputs)?;
            let run = AnnotationRun::load(&run)?;
            let lc = LabeledCorpus::from_run(&run, &corpus);
            let overall = frequency_table(&lc, &cb);
            let groups = if by_role { frequency_by_role(&lc, &cb, &corpus) } else { Vec::new() };
            let mut tables = vec![("All".to_string(), &overall)];
            tables.extend(groups.iter().map(|(r, t)| (r.as_str().to_string(), t)));
            write_frequency_csv(&tables, output(out.as_deref())?)?;
        }
        Command::ReproCheck {
            inputs,
            llm,
            sample,
            repeats,
            seed,
        } => {
            let (corpus, cb) = load_inputs(&inputs)?;
            let provider = llm.provider(&cb)?;
            let n = sample.min(corpus.len());
            let f = reproducibility_check(provider.as_ref(), &corpus, &cb, &llm.config(None), n, repeats, seed)?;
            println!("{f:.4}");
        }
        Command::Serve { state_dir, bind } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(voicelens::service::serve(state_dir, bind))?;
        }
        Command::Run {
            config,
            resume,
            fail_before,
        } => {
            let fail_before = fail_before
                .map(|s| s.parse::<Stage>())
                .transpose()
                .map_err(anyhow::Error::msg)?;
            let outcome = run_pipeline(&config, &RunOptions { resume, fail_before })?;
            let names = |v: &[Stage]| v.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ");
            eprintln!("ran: {}", names(&outcome.executed));
            if !outcome.skipped.is_empty() {
                eprintln!("skipped (checkpointed): {}", names(&outcome.skipped));
            }
            eprintln!("outputs in {}", outcome.out_dir.display());
        }
    }
    Ok(())
}

fn annotate(cmd: AnnotateCommand) -> Result<()> {
    match cmd {
        AnnotateCommand::Llm {
            inputs,
            llm,
            run_id,
            out,
        } => {
            let (corpus, cb) = load_inputs(&inputs)?;
            let provider = llm.provider(&cb)?;
            let run = annotate_corpus(provider.as_ref(), &corpus, &cb, &llm.config(run_id))?;
            save_run(&run, &out)?;
        }
        AnnotateCommand::Lda {
            inputs,
            k,
            alpha,
            beta,
            iterations,
            burn_in,
            seed,
            min_term_count,
            k_list,
            label_map,
            out_dir,
        } => {
            let (corpus, cb) = load_inputs(&inputs)?;
            let dtm = build_dtm(
                &corpus,
                &DtmOptions {
                    min_term_count,
                    ..DtmOptions::default()
                },
            )?;
            let cfg = LdaConfig {
                k,
                alpha,
                beta,
                iterations,
                burn_in,
                seed,
                ..LdaConfig::default()
            };
            fs::create_dir_all(&out_dir)?;
            if !k_list.is_empty() {
                let rows = search_k(&dtm, &k_list, &cfg, &SearchOptions::default())?;
                write_diagnostics_csv(&rows, File::create(out_dir.join("diagnostics.csv"))?)?;
            }
            let model = fit_lda(&dtm, &cfg)?;
            fs::write(out_dir.join("model.json"), serde_json::to_string(&model)?)?;
            let map = label_map
                .map(|p| TopicLabelMap::from_worksheet(File::open(p)?, &cb).map_err(anyhow::Error::from))
                .transpose()?;
            export_worksheet(&model, 10, 20, map.as_ref(), File::create(out_dir.join("worksheet.csv"))?)?;
            if let Some(map) = map {
                save_run(&annotate_corpus_lda(&model, &map, "lda-themes"), &out_dir.join("lda-themes.jsonl"))?;
            }
            eprintln!("model and worksheet -> {}", out_dir.display());
        }
        AnnotateCommand::Lexicon {
            corpus,
            lexicon,
            run_id,
            out,
        } => {
            let corpus = corpus_from(&corpus)?;
            let lex = match lexicon.as_deref() {
                Some([v, b, n]) => load_lexicon(v, b, n)?,
                Some(_) => bail!("--lexicon takes three paths"),
                None => SentimentLexicon::bundled(),
            };
            save_run(&annotate_corpus_lexicon(&lex, &corpus, &run_id), &out)?;
        }
    }
    Ok(())
}

fn label_topics(cmd: LabelCommand) -> Result<()> {
    match cmd {
        LabelCommand::Export {
            model,
            existing,
            codebook,
            words,
            docs,
            out,
        } => {
            let model = read_model(&model)?;
            let map = match (existing, codebook) {
                (Some(e), Some(cb)) => Some(TopicLabelMap::from_worksheet(File::open(e)?, &load_codebook(cb)?)?),
                (Some(_), None) => bail!("--existing needs --codebook"),
                _ => None,
            };
            export_worksheet(&model, words, docs, map.as_ref(), output(Some(&out))?)?;
        }
        LabelCommand::Import {
            model,
            worksheet,
            codebook,
            run_id,
            out,
        } => {
            let model = read_model(&model)?;
            let map = TopicLabelMap::from_worksheet(File::open(&worksheet)?, &load_codebook(codebook)?)?;
            eprintln!("{} of {} topics labeled", map.labeled_count(), model.k);
            save_run(&annotate_corpus_lda(&model, &map, &run_id), &out)?;
        }
    }
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let (corpus, cb) = load_inputs(&a.inputs)?;
    let machine = AnnotationRun::load(&a.machine)?;
    let reference = AnnotationRun::load(&a.reference)?;
    let opts = EvalOptions {
        bootstrap_iters: a.bootstrap_iters,
        shuffle_repeats: a.shuffle_repeats,
        seed: a.seed,
        include_parent_only: !a.exclude_parent_only,
    };
    let mut summary = EvalSummary {
        options: Some(opts),
        ..Default::default()
    };
    if machine.kind != reference.kind {
        bail!("cannot compare a {:?} run with a {:?} run", machine.kind, reference.kind);
    }
    match machine.kind {
        voicelens::annotation::RunKind::Thematic => {
            for level in [Level::Original, Level::Parent] {
                summary
                    .thematic
                    .push(evaluate_thematic(&corpus, &cb, &machine, &reference, level, &opts)?);
            }
        }
        voicelens::annotation::RunKind::Sentiment => {
            let themes = a.reference_themes.map(AnnotationRun::load).transpose()?;
            summary
                .sentiment
                .push(evaluate_sentiment(&corpus, &machine, &reference, themes.as_ref())?);
        }
    }
    if let Some(p) = &a.csv {
        summary.write_csv(output(Some(p))?)?;
    }
    match &a.json {
        Some(p) => output(Some(p))?.write_all(summary.to_json().as_bytes())?,
        None if a.csv.is_none() => summary.write_csv(io::stdout().lock())?,
        None => {}
    }
    Ok(())
}
