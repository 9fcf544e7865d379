//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::fs;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use common::*;
use voicelens::annotation::load_human_labels;
use voicelens::codebook::CodeRef;
use voicelens::corpus::{load_corpus, CorpusFormat};
use voicelens::harmonize::{to_parent_level, LabeledCorpus, Level};
use voicelens::lda::{fit_lda, search_k, LdaConfig, SearchOptions};
use voicelens::lexicon::{classify, compound_from_sum, SentimentLexicon};
use voicelens::llm::{
    annotate_corpus, build_sentiment_prompt_text, build_thematic_prompt_text, reproducibility_check, AnnotatorConfig,
    KeywordMockProvider, PromptStyle,
};
use voicelens::metrics::binary::{auc_binary, cohen_kappa, micro_prf};
use voicelens::metrics::sets::{hit_rate_sets, overlap_sets, pair_overlap};
use voicelens::metrics::{
    bootstrap, evaluate_thematic, hit_rate, shuffled_hit_rate, ConfusionMatrix3, EvalOptions, MetricsError,
};
use voicelens::pipeline::{run_pipeline, RunOptions};
use voicelens::synthetic::{child_noise_fixture, copied_label_fixture, flat_codebook, planted_corpus, PlantedSpec};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn metric_oracle() -> Outcome {
    const LIMIT: Duration = Duration::from_secs(10);
    let start = Instant::now();
    let corpora: Vec<[u8; 3]> = (0..512u32)
        .map(|i| [(i & 7) as u8, ((i >> 3) & 7) as u8, ((i >> 6) & 7) as u8])
        .collect();
    let mismatches: usize = corpora
        .par_iter()
        .map(|m| {
            let ms: Vec<Vec<CodeRef>> = m.iter().map(|&x| mask_to_set(x)).collect();
            let mr: Vec<Vec<u8>> = m.iter().map(|&x| mask_to_row(x)).collect();
            let mut bad = 0;
            for h in &corpora {
                let hs: Vec<Vec<CodeRef>> = h.iter().map(|&x| mask_to_set(x)).collect();
                let hr: Vec<Vec<u8>> = h.iter().map(|&x| mask_to_row(x)).collect();
                let hit_ok = match (hit_rate_sets(&ms, &hs), oracle_hit_rate(m, h)) {
                    (Ok(a), Some(b)) => a == b,
                    (Err(MetricsError::NoEligibleParagraphs), None) => true,
                    _ => false,
                };
                let overlap_ok = match (overlap_sets(&ms, &hs), oracle_overlap(m, h)) {
                    (Ok(o), Some(x)) => (o.simpson, o.dice, o.jaccard) == x,
                    (Err(MetricsError::NoEligibleParagraphs), None) => true,
                    _ => false,
                };
                let p = micro_prf(&mr, &hr).unwrap();
                let micro_ok = (p.precision, p.recall, p.f1) == oracle_micro(m, h);
                bad += usize::from(!(hit_ok && overlap_ok && micro_ok));
            }
            bad
        })
        .sum();
    let elapsed = start.elapsed();
    check(
        mismatches == 0 && elapsed < LIMIT,
        format!("{} corpus pairs, {mismatches} mismatches, {elapsed:.2?} (limit {LIMIT:?})", 512 * 512),
    )
}

fn kappa_auc_hand_cases() -> Outcome {
    const TOL: f64 = 1e-12;
    let truth = [1, 1, 0, 0];
    let k0 = cohen_kappa(&[1, 0, 1, 0], &truth).map_err(|e| e.to_string())?;
    let k5 = cohen_kappa(&[1, 1, 0, 1], &truth).map_err(|e| e.to_string())?;
    let auc = auc_binary(&[1, 0, 1, 0], &truth).map_err(|e| e.to_string())?;
    let m = ConfusionMatrix3([[218, 4, 20], [71, 322, 162], [31, 31, 215]]);
    let acc = m.accuracy();
    check(
        k0.abs() < TOL && (k5 - 0.5).abs() < TOL && (auc - 0.5).abs() < TOL && (acc - 755.0 / 1074.0).abs() < 1e-9,
        format!("kappa {k0:.3e}/{k5}, auc {auc}, printed matrix accuracy {acc:.4} (755/1074)"),
    )
}

fn overlap_ordering() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10_000);
    let random_set = |rng: &mut ChaCha8Rng| {
        let n = rng.gen_range(1..=3);
        rand::seq::index::sample(rng, 12, n).into_vec()
    };
    let mut violations = 0;
    for _ in 0..10_000 {
        let m = random_set(&mut rng);
        let h = random_set(&mut rng);
        let (s, d, j) = pair_overlap(&m, &h);
        violations += usize::from(!(s >= d && d >= j));
    }
    check(violations == 0, format!("10000 pairs, {violations} violations"))
}

fn shuffled_separation() -> Outcome {
    const LIMIT: Duration = Duration::from_secs(30);
    let start = Instant::now();
    let f = copied_label_fixture(500, 10, 42);
    let h = LabeledCorpus::from_run(&f.human, &f.corpus);
    let m = LabeledCorpus::from_run(&f.machine, &f.corpus);
    let hr = hit_rate(&m, &h).map_err(|e| e.to_string())?;
    let sh = shuffled_hit_rate(&m, &h, 42, 100).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(
        hr == 100.0 && (sh.value - 10.0).abs() <= 3.0 && elapsed < LIMIT,
        format!("hit rate {hr}%, shuffled {:.2}% (target 10 ± 3), {elapsed:.2?}", sh.value),
    )
}

fn bootstrap_determinism() -> Outcome {
    let cb = fixture_codebook();
    let corpus = load_corpus(fixtures_dir().join("corpus.csv"), CorpusFormat::Csv).map_err(|e| e.to_string())?;
    let human = load_human_labels(fixtures_dir().join("human_labels.csv"), &cb, &corpus).map_err(|e| e.to_string())?;
    let run = annotate_corpus(&KeywordMockProvider::new(&cb), &corpus, &cb, &AnnotatorConfig::default())
        .map_err(|e| e.to_string())?;
    let opts = EvalOptions { bootstrap_iters: 100, ..EvalOptions::default() };
    let report = |o: &EvalOptions| {
        evaluate_thematic(&corpus, &cb, &run, &human.themes, Level::Original, o)
            .map(|r| serde_json::to_vec(&r).unwrap())
            .map_err(|e| e.to_string())
    };
    let a = report(&opts)?;
    let b = report(&opts)?;
    let c = report(&EvalOptions { seed: opts.seed + 1, ..opts })?;

    let xs: Vec<f64> = (0..1000).map(|i| (i % 2) as f64).collect();
    let mean = |idx: &[usize]| Ok(idx.iter().map(|&i| xs[i]).sum::<f64>() / idx.len() as f64);
    let v = bootstrap(xs.len(), mean, 100, 7).map_err(|e| e.to_string())?;
    let (lo, hi) = (v.ci_low.unwrap_or(f64::NAN), v.ci_high.unwrap_or(f64::NAN));
    check(
        a == b && a != c && (lo - 0.47).abs() <= 0.01 && (hi - 0.53).abs() <= 0.01,
        format!(
            "same seed identical: {}, new seed differs: {}, Bernoulli CI [{lo:.4}, {hi:.4}] (100 iterations, target [0.47, 0.53] ± 0.01)",
            a == b,
            a != c
        ),
    )
}

fn lda_recovery() -> Outcome {
    const LIMIT: Duration = Duration::from_secs(300);
    const SEEDS: u64 = 20;
    let start = Instant::now();
    let jobs: Vec<(usize, u64)> = [2usize, 3, 5].iter().flat_map(|&k| (0..SEEDS).map(move |s| (k, s))).collect();
    let results: Vec<(usize, bool, bool)> = jobs
        .par_iter()
        .map(|&(k, seed)| {
            let p = planted_corpus(&PlantedSpec { k, ..PlantedSpec::default() }, 1000 + seed);
            let cfg = LdaConfig {
                k,
                alpha: Some(0.1),
                iterations: 200,
                burn_in: 100,
                seed,
                ..LdaConfig::default()
            };
            let m = fit_lda(&p.dtm, &cfg).expect("fit");
            let recovered = aligned_cosines(&p.phi, &m.phi).iter().all(|&c| c >= 0.9);
            let rows = search_k(&p.dtm, &[1, k], &cfg, &SearchOptions::default()).expect("search");
            let ranked = rows[1].heldout_loglik > rows[0].heldout_loglik;
            (k, recovered, ranked)
        })
        .collect();
    let mut detail = Vec::new();
    let mut ok = true;
    for k in [2, 3, 5] {
        let n = results.iter().filter(|r| r.0 == k && r.1).count();
        ok &= n >= 19;
        detail.push(format!("K={k}: {n}/{SEEDS} recovered"));
    }
    let ranked = results.iter().filter(|r| r.2).count();
    let frac = ranked as f64 / results.len() as f64;
    let elapsed = start.elapsed();
    ok &= frac >= 0.95 && elapsed < LIMIT;
    detail.push(format!("held-out K_true > 1 in {ranked}/{} runs", results.len()));
    detail.push(format!("{elapsed:.1?}"));
    check(ok, detail.join(", "))
}

fn lexicon_scorer() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let s: f64 = rng.gen_range(-50.0..50.0);
        worst = worst.max((compound_from_sum(s) - s / (s * s + 15.0).sqrt()).abs());
    }
    use voicelens::annotation::SentimentLabel::*;
    let cutoffs = classify(0.05) == Positive
        && classify(-0.05) == Negative
        && classify(0.0499) == Neutral
        && classify(-0.0499) == Neutral;

    let lex = SentimentLexicon::bundled();
    let text = fs::read_to_string(test_data("data/curated_sentences.tsv")).map_err(|e| e.to_string())?;
    let rows: Vec<(String, f64, bool)> = text
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let c: Vec<&str> = l.split('\t').collect();
            (c[0].to_string(), c[1].parse().unwrap(), c[2] == "true")
        })
        .collect();
    let mut monotone_failures = 0;
    for (sentence, _, _) in &rows {
        for w in ["good", "great", "happy", "bad", "terrible", "sad"] {
            let v = lex.valence[w];
            let plain = lex.score(&format!("{sentence} and we say {w}")).compound;
            let boosted = lex.score(&format!("{sentence} and we say very {w}")).compound;
            let negated = lex.score(&format!("{sentence} and we say not {w}")).compound;
            let ok = if v > 0.0 {
                boosted > plain && plain > negated
            } else {
                boosted < plain && plain < negated
            };
            monotone_failures += usize::from(!ok);
        }
    }
    let comparable: Vec<f64> = rows
        .iter()
        .filter(|r| r.2)
        .map(|(s, reference, _)| (lex.score(s).compound - reference).abs())
        .collect();
    let max_dev = comparable.iter().cloned().fold(0.0, f64::max);
    check(
        worst < 1e-12 && cutoffs && monotone_failures == 0 && max_dev <= 0.05,
        format!(
            "normalization max error {worst:.1e}, cutoffs exact: {cutoffs}, monotonicity failures {monotone_failures}/{}, reference subset n={} max |Δ| {max_dev:.4}",
            rows.len() * 6,
            comparable.len()
        ),
    )
}

fn prompt_fidelity() -> Outcome {
    let cb = fixture_codebook();
    let csv = cb.to_prompt_csv();
    let text = "Our district finally hired enough paraeducators this year.";
    let cot = build_thematic_prompt_text(&csv, text, PromptStyle::CoTThematic);
    let cot_ok = cot
        == golden(
            "cot_thematic_prompt.txt",
            &[("{codebook}", csv.trim_end_matches('\n')), ("[[[TEXTGOHERE]]]", text)],
        );
    let sent_ok = build_sentiment_prompt_text(text) == golden("sentiment_prompt.txt", &[("[TextGoHere]", text)]);
    check(cot_ok && sent_ok, format!("thematic golden match: {cot_ok}, sentiment golden match: {sent_ok}"))
}

fn end_to_end_reproducibility() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let ra = run_pipeline(&stage_fixture(a.path()), &RunOptions::default()).map_err(|e| e.to_string())?;
    let rb = run_pipeline(&stage_fixture(b.path()), &RunOptions::default()).map_err(|e| e.to_string())?;
    let same = |rel: &str| fs::read(ra.out_dir.join(rel)).ok() == fs::read(rb.out_dir.join(rel)).ok();
    let manifest = same("manifest.json");
    let report = same("eval/report.json");

    let cb = fixture_codebook();
    let corpus = load_corpus(fixtures_dir().join("corpus.csv"), CorpusFormat::Csv).map_err(|e| e.to_string())?;
    let repro = reproducibility_check(
        &KeywordMockProvider::new(&cb),
        &corpus,
        &cb,
        &AnnotatorConfig::default(),
        corpus.len(),
        3,
        42,
    )
    .map_err(|e| e.to_string())?;
    check(
        manifest && report && repro == 1.0,
        format!("manifest identical: {manifest}, report identical: {report}, reproducibility {repro}"),
    )
}

fn parent_dominance() -> Outcome {
    let cb = flat_codebook(12, 4);
    let mut violations = Vec::new();
    for seed in 0..50u64 {
        let noise = 0.1 + 0.4 * (seed as f64 / 49.0);
        let (h, m) = child_noise_fixture(&cb, 200, noise, seed);
        let child = hit_rate(&m, &h).map_err(|e| e.to_string())?;
        let hp = to_parent_level(&h, &cb).map_err(|e| e.to_string())?;
        let mp = to_parent_level(&m, &cb).map_err(|e| e.to_string())?;
        let parent = hit_rate(&mp, &hp).map_err(|e| e.to_string())?;
        if parent < child {
            violations.push(format!("seed {seed}: {parent:.2} < {child:.2}"));
        }
    }
    check(
        violations.is_empty(),
        format!("50 fixtures, noise 0.1 to 0.5, {} violations {violations:?}", violations.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("metric oracle equivalence", metric_oracle),
        ("kappa/AUC hand cases", kappa_auc_hand_cases),
        ("overlap ordering", overlap_ordering),
        ("shuffled-baseline separation", shuffled_separation),
        ("bootstrap determinism and calibration", bootstrap_determinism),
        ("LDA recovery", lda_recovery),
        ("lexicon scorer", lexicon_scorer),
        ("prompt fidelity", prompt_fidelity),
        ("end-to-end reproducibility", end_to_end_reproducibility),
        ("parent-level dominance", parent_dominance),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(d) => println!("PASS {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL {name}: {d}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
