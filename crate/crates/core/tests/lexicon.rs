mod common;

use std::fs;

use common::test_data;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voicelens::annotation::SentimentLabel;
use voicelens::lexicon::{classify, compound_from_sum, SentimentLexicon};

struct Curated {
    sentence: String,
    reference: f64,
    comparable: bool,
}

fn curated() -> Vec<Curated> {
    let text = fs::read_to_string(test_data("data/curated_sentences.tsv")).unwrap();
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let cols: Vec<&str> = l.split('\t').collect();
            Curated {
                sentence: cols[0].to_string(),
                reference: cols[1].parse().unwrap(),
                comparable: cols[2] == "true",
            }
        })
        .collect()
}

#[test]
fn curated_set_agrees_with_reference_scores() {
    let lex = SentimentLexicon::bundled();
    let rows = curated();
    assert_eq!(rows.len(), 30);
    let mut checked = 0;
    for r in rows.iter().filter(|r| r.comparable) {
        let c = lex.score(&r.sentence).compound;
        assert!((c - r.reference).abs() <= 0.05, "{:?}: {c} vs {}", r.sentence, r.reference);
        checked += 1;
    }
    assert!(checked >= 20);
}

const PROBES: [&str; 6] = ["good", "great", "happy", "bad", "terrible", "sad"];

#[test]
fn negation_and_booster_monotonicity_on_curated_set() {
    let lex = SentimentLexicon::bundled();
    for filler in ["and", "we", "say"] {
        assert!(!lex.valence.contains_key(filler) && !lex.boosters.contains_key(filler));
        assert!(!lex.negators.contains(filler));
    }
    for r in curated() {
        let base = lex.score(&r.sentence).raw_sum;
        for w in PROBES {
            let v = lex.valence[w];
            let plain = lex.score(&format!("{} and we say {w}", r.sentence));
            let boosted = lex.score(&format!("{} and we say very {w}", r.sentence));
            let negated = lex.score(&format!("{} and we say not {w}", r.sentence));
            let (dp, db, dn) = (plain.raw_sum - base, boosted.raw_sum - base, negated.raw_sum - base);
            assert!((dp - v).abs() < 1e-12, "{}: {w}", r.sentence);
            assert!(db * v > 0.0 && db.abs() > dp.abs(), "{}: very {w}", r.sentence);
            assert!(dn * v < 0.0, "{}: not {w}", r.sentence);
            if v > 0.0 {
                assert!(boosted.compound > plain.compound && plain.compound > negated.compound);
            } else {
                assert!(boosted.compound < plain.compound && plain.compound < negated.compound);
            }
        }
    }
}

#[test]
fn contraction_negates() {
    let lex = SentimentLexicon::bundled();
    assert!(lex.score("it isn't good").compound < 0.0);
    assert!(lex.score("it isn’t good").compound < 0.0);
}

#[test]
fn compound_normalization_on_random_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let s: f64 = rng.gen_range(-50.0..50.0);
        assert!((compound_from_sum(s) - s / (s * s + 15.0).sqrt()).abs() < 1e-12);
    }
}

#[test]
fn cutoff_boundaries() {
    assert_eq!(classify(0.05), SentimentLabel::Positive);
    assert_eq!(classify(-0.05), SentimentLabel::Negative);
    assert_eq!(classify(0.049_999), SentimentLabel::Neutral);
    assert_eq!(classify(-0.049_999), SentimentLabel::Neutral);
    assert_eq!(classify(0.0), SentimentLabel::Neutral);
}

proptest! {
    #[test]
    fn compound_bounded_and_odd(s in -1e6f64..1e6) {
        let c = compound_from_sum(s);
        prop_assert!(c > -1.0 && c < 1.0);
        prop_assert!((c + compound_from_sum(-s)).abs() < 1e-15);
    }

    #[test]
    fn compound_monotone(a in -100f64..100.0, b in -100f64..100.0) {
        prop_assume!(a < b);
        prop_assert!(compound_from_sum(a) <= compound_from_sum(b));
    }

    #[test]
    fn text_without_hits_is_neutral(words in prop::collection::vec("[qxz]{3,8}", 0..20)) {
        let lex = SentimentLexicon::bundled();
        prop_assume!(words.iter().all(|w| !lex.valence.contains_key(w)));
        let s = lex.score(&words.join(" "));
        prop_assert_eq!(s.hit_count, 0);
        prop_assert_eq!(s.compound, 0.0);
    }
}
