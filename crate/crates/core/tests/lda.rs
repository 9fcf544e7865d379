mod common;

use common::*;
use voicelens::lda::{
    exclusivity, fit_lda, held_out_loglik, residual_dispersion, search_k, top_words, DocTermMatrix, LdaConfig,
    SearchOptions, TopicModel,
};
use voicelens::synthetic::{planted_corpus, PlantedSpec};

fn cfg(k: usize, seed: u64) -> LdaConfig {
    LdaConfig {
        k,
        alpha: Some(0.1),
        iterations: 300,
        burn_in: 150,
        seed,
        ..LdaConfig::default()
    }
}

/// Two topics over disjoint halves of the vocabulary.
fn disjoint_two_topic(docs: usize, seed: u64) -> voicelens::synthetic::PlantedCorpus {
    planted_corpus(
        &PlantedSpec {
            k: 2,
            vocab: 20,
            docs,
            doc_len: 40,
            block_mass: 1.0,
            ..PlantedSpec::default()
        },
        seed,
    )
}

#[test]
fn recovers_disjoint_vocabularies() {
    let p = disjoint_two_topic(200, 1);
    let m = fit_lda(&p.dtm, &cfg(2, 3)).unwrap();
    for row in &m.phi {
        let a: f64 = row[..10].iter().sum();
        assert!(a >= 0.95 || a <= 0.05, "mass on block A: {a}");
    }
    let cos = aligned_cosines(&p.phi, &m.phi);
    assert!(cos.iter().all(|&c| c >= 0.9), "{cos:?}");
}

#[test]
fn surplus_topics_keep_simplex() {
    let p = disjoint_two_topic(60, 2);
    let m = fit_lda(&p.dtm, &cfg(4, 1)).unwrap();
    for row in &m.theta {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn top_words_come_from_planted_blocks() {
    let p = disjoint_two_topic(200, 4);
    let m = fit_lda(&p.dtm, &cfg(2, 4)).unwrap();
    for k in 0..2 {
        let words = top_words(&m, k, 5).unwrap();
        let in_a = words.iter().filter(|w| w.as_str() < "w010").count();
        assert!(in_a == 0 || in_a == 5, "{words:?}");
    }
}

#[test]
fn heldout_prefers_true_k() {
    let p = disjoint_two_topic(200, 5);
    let rows = search_k(&p.dtm, &[1, 2], &cfg(2, 9), &SearchOptions::default()).unwrap();
    assert_eq!(rows[0].k, 1);
    assert!(rows[1].heldout_loglik > rows[0].heldout_loglik, "{rows:?}");
    let rows = search_k(&p.dtm, &[2, 4], &cfg(2, 9), &SearchOptions::default()).unwrap();
    assert!(rows[0].heldout_loglik > rows[1].heldout_loglik, "{rows:?}");
}

#[test]
fn heldout_rejects_bad_fraction() {
    let p = disjoint_two_topic(10, 5);
    assert!(held_out_loglik(|t| fit_lda(t, &cfg(2, 1)), &p.dtm, 0.0, 1).is_err());
    assert!(held_out_loglik(|t| fit_lda(t, &cfg(2, 1)), &p.dtm, 0.6, 1).is_err());
}

fn generating_model(p: &voicelens::synthetic::PlantedCorpus) -> TopicModel {
    TopicModel {
        k: p.phi.len(),
        vocab: p.dtm.vocab.clone(),
        doc_ids: p.dtm.doc_ids.clone(),
        phi: p.phi.clone(),
        theta: p.theta.clone(),
        alpha: 0.1,
        beta: 0.01,
        iterations: 0,
        burn_in: 0,
        seed: 0,
        loglik_trace: Vec::new(),
    }
}

#[test]
fn dispersion_near_one_under_generating_model() {
    let p = planted_corpus(
        &PlantedSpec {
            k: 3,
            vocab: 30,
            docs: 400,
            doc_len: 50,
            ..PlantedSpec::default()
        },
        8,
    );
    assert!(p.dtm.n_tokens() >= 10_000);
    let d = residual_dispersion(&generating_model(&p), &p.dtm);
    assert!((d - 1.0).abs() <= 0.2, "dispersion {d}");
}

#[test]
fn exclusivity_separates_disjoint_from_identical_topics() {
    let vocab: Vec<String> = (0..6).map(|i| format!("w{i}")).collect();
    let base = |phi: Vec<Vec<f64>>| TopicModel {
        k: 2,
        vocab: vocab.clone(),
        doc_ids: vec!["d".into()],
        phi,
        theta: vec![vec![0.5, 0.5]],
        alpha: 0.1,
        beta: 0.01,
        iterations: 0,
        burn_in: 0,
        seed: 0,
        loglik_trace: Vec::new(),
    };
    let disjoint = base(vec![
        vec![0.3, 0.3, 0.3, 0.03, 0.04, 0.03],
        vec![0.03, 0.04, 0.03, 0.3, 0.3, 0.3],
    ]);
    let same = base(vec![vec![0.3, 0.3, 0.3, 0.03, 0.04, 0.03]; 2]);
    let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    assert!(mean(exclusivity(&disjoint, 3, 0.7)) > mean(exclusivity(&same, 3, 0.7)));
}

#[test]
fn fit_is_seed_deterministic() {
    let p = disjoint_two_topic(50, 6);
    let a = fit_lda(&p.dtm, &cfg(3, 12)).unwrap();
    let b = fit_lda(&p.dtm, &cfg(3, 12)).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let c = fit_lda(&p.dtm, &cfg(3, 13)).unwrap();
    assert_ne!(a.phi, c.phi);
}

#[test]
fn empty_documents_are_tolerated() {
    let vocab = vec!["a".to_string(), "b".to_string()];
    let docs = vec![vec![0u32, 1, 0], vec![], vec![1, 1]];
    let dtm = DocTermMatrix::from_token_ids(vocab, &docs, vec!["x".into(), "y".into(), "z".into()]);
    let m = fit_lda(&dtm, &cfg(2, 1)).unwrap();
    assert!((m.theta[1].iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert!(residual_dispersion(&m, &dtm).is_finite());
}
