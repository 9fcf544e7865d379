//! Seeded synthetic fixtures: planted-topic corpora and label runs with
//! known agreement structure.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution, WeightedIndex};

use crate::annotation::{AnnotationRecord, AnnotationRun, RunKind, Source, MAX_LABELS};
use crate::codebook::{ChildCode, CodeRef, Codebook};
use crate::corpus::{Corpus, Paragraph, RoleGroup};
use crate::harmonize::LabeledCorpus;
use crate::lda::DocTermMatrix;

/// Corpus sampled from a known LDA model.
#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub dtm: DocTermMatrix,
    /// K × V generating topic-word distributions.
    pub phi: Vec<Vec<f64>>,
    /// D × K generating document-topic proportions.
    pub theta: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy)]
pub struct PlantedSpec {
    pub k: usize,
    pub vocab: usize,
    pub docs: usize,
    pub doc_len: usize,
    /// Document-topic Dirichlet concentration.
    pub alpha: f64,
    /// Share of each topic's mass on its own vocabulary block.
    pub block_mass: f64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        PlantedSpec {
            k: 2,
            vocab: 50,
            docs: 500,
            doc_len: 50,
            alpha: 0.1,
            block_mass: 0.9,
        }
    }
}

/// Each topic spreads `block_mass` over its own contiguous vocabulary
/// block (Dirichlet(1) weights within the block) and the rest uniformly.
pub fn planted_corpus(spec: &PlantedSpec, seed: u64) -> PlantedCorpus {
    assert!(spec.k >= 1 && spec.vocab >= spec.k, "need at least one word per topic");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let block = spec.vocab / spec.k;
    let phi: Vec<Vec<f64>> = (0..spec.k)
        .map(|t| {
            let lo = t * block;
            let hi = if t + 1 == spec.k { spec.vocab } else { lo + block };
            let w: Vec<f64> = if hi - lo > 1 {
                Dirichlet::new_with_size(1.0, hi - lo).expect("valid dirichlet").sample(&mut rng)
            } else {
                vec![1.0]
            };
            let base = (1.0 - spec.block_mass) / spec.vocab as f64;
            let mut row = vec![base; spec.vocab];
            for (i, x) in w.into_iter().enumerate() {
                row[lo + i] += spec.block_mass * x;
            }
            row
        })
        .collect();
    let theta: Vec<Vec<f64>> = (0..spec.docs)
        .map(|_| {
            if spec.k == 1 {
                vec![1.0]
            } else {
                Dirichlet::new_with_size(spec.alpha, spec.k)
                    .expect("valid dirichlet")
                    .sample(&mut rng)
            }
        })
        .collect();
    let word_dists: Vec<WeightedIndex<f64>> = phi
        .iter()
        .map(|r| WeightedIndex::new(r).expect("positive weights"))
        .collect();
    let docs: Vec<Vec<u32>> = theta
        .iter()
        .map(|th| {
            // Dirichlet draws with tiny alpha can underflow to all zeros.
            let td = WeightedIndex::new(th).unwrap_or_else(|_| WeightedIndex::new(vec![1.0; spec.k]).unwrap());
            (0..spec.doc_len)
                .map(|_| word_dists[td.sample(&mut rng)].sample(&mut rng) as u32)
                .collect()
        })
        .collect();
    let vocab = (0..spec.vocab).map(|i| format!("w{i:03}")).collect();
    let ids = (0..spec.docs).map(|i| format!("d{i:04}")).collect();
    PlantedCorpus {
        dtm: DocTermMatrix::from_token_ids(vocab, &docs, ids),
        phi,
        theta,
    }
}

/// Codebook with `n_codes` children spread over `n_parents` parents.
pub fn flat_codebook(n_codes: usize, n_parents: usize) -> Codebook {
    let parents: Vec<String> = (0..n_parents).map(|p| format!("Parent {p}")).collect();
    let children = (0..n_codes)
        .map(|c| ChildCode {
            label: format!("Code {c}"),
            parent_label: parents[c % n_parents].clone(),
            description: String::new(),
            keywords: Vec::new(),
        })
        .collect();
    Codebook::new(parents, children).expect("valid synthetic codebook")
}

/// Corpus of `n` placeholder paragraphs, roles cycling through all groups.
pub fn placeholder_corpus(n: usize) -> Corpus {
    Corpus::new(
        (0..n)
            .map(|i| Paragraph {
                id: format!("s{i:04}"),
                text: format!("synthetic paragraph {i}"),
                interviewee_id: format!("I{:03}", i / 5),
                role_group: RoleGroup::ALL[i % RoleGroup::ALL.len()],
                location: None,
                extra: Default::default(),
            })
            .collect(),
    )
    .expect("unique ids")
}

fn run_from_sets(run_id: &str, source: Source, corpus: &Corpus, sets: &[Vec<CodeRef>]) -> AnnotationRun {
    let mut run = AnnotationRun::new(run_id, source, RunKind::Thematic);
    for (p, set) in corpus.paragraphs.iter().zip(sets) {
        run.annotations.push(AnnotationRecord {
            paragraph_id: p.id.clone(),
            labels: set.clone(),
            sentiment: None,
            reasoning: String::new(),
            raw_text: String::new(),
        });
    }
    run
}

#[derive(Debug, Clone)]
pub struct CopiedFixture {
    pub corpus: Corpus,
    pub codebook: Codebook,
    pub human: AnnotationRun,
    pub machine: AnnotationRun,
}

/// `n` paragraphs, each with one code drawn uniformly from `n_codes`; the
/// machine run copies the human run exactly.
pub fn copied_label_fixture(n: usize, n_codes: usize, seed: u64) -> CopiedFixture {
    let codebook = flat_codebook(n_codes, 2);
    let corpus = placeholder_corpus(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sets: Vec<Vec<CodeRef>> = (0..n)
        .map(|_| vec![CodeRef::Child(codebook.children()[rng.gen_range(0..n_codes)].label.clone())])
        .collect();
    CopiedFixture {
        human: run_from_sets("human-themes", Source::Human, &corpus, &sets),
        machine: run_from_sets("llm-themes", Source::Llm, &corpus, &sets),
        corpus,
        codebook,
    }
}

/// Random human label sets (1 to 3 distinct children) and a machine copy in
/// which each label is, with probability `noise`, replaced by a random
/// child, and with probability `noise / 2` an extra random child is added
/// or a label dropped.
pub fn child_noise_fixture(cb: &Codebook, n: usize, noise: f64, seed: u64) -> (LabeledCorpus, LabeledCorpus) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let children: Vec<CodeRef> = cb.children().iter().map(|c| CodeRef::Child(c.label.clone())).collect();
    let mut human = Vec::with_capacity(n);
    let mut machine = Vec::with_capacity(n);
    for _ in 0..n {
        let size = rng.gen_range(1..=MAX_LABELS.min(children.len()));
        let h: Vec<CodeRef> = children.choose_multiple(&mut rng, size).cloned().collect();
        let mut m: Vec<CodeRef> = Vec::new();
        for c in &h {
            let pick = if rng.gen_bool(noise) {
                children.choose(&mut rng).expect("non-empty").clone()
            } else {
                c.clone()
            };
            if !m.contains(&pick) {
                m.push(pick);
            }
        }
        if rng.gen_bool(noise / 2.0) {
            if m.len() < MAX_LABELS && rng.gen_bool(0.5) {
                let extra = children.choose(&mut rng).expect("non-empty").clone();
                if !m.contains(&extra) {
                    m.push(extra);
                }
            } else if m.len() > 1 {
                m.remove(rng.gen_range(0..m.len()));
            }
        }
        human.push(h);
        machine.push(m);
    }
    let ids: Vec<String> = (0..n).map(|i| format!("s{i:04}")).collect();
    (
        LabeledCorpus::new(Source::Human, ids.clone(), human),
        LabeledCorpus::new(Source::Llm, ids, machine),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_rows_are_distributions() {
        let p = planted_corpus(&PlantedSpec { k: 3, docs: 20, ..Default::default() }, 1);
        for row in p.phi.iter().chain(&p.theta) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert_eq!(p.dtm.n_docs(), 20);
        assert_eq!(p.dtm.n_tokens(), 20 * 50);
    }

    #[test]
    fn copied_fixture_is_identical() {
        let f = copied_label_fixture(50, 10, 3);
        assert_eq!(f.human.annotations, f.machine.annotations);
        assert!(f.human.annotations.iter().all(|r| r.labels.len() == 1));
    }

    #[test]
    fn noise_fixture_is_seeded() {
        let cb = flat_codebook(12, 4);
        let a = child_noise_fixture(&cb, 30, 0.3, 9);
        let b = child_noise_fixture(&cb, 30, 0.3, 9);
        assert_eq!(a.1.sets, b.1.sets);
        assert!(a.1.sets.iter().all(|s| !s.is_empty() && s.len() <= MAX_LABELS));
    }
}
