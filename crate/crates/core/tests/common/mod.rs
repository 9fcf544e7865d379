//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use voicelens::codebook::CodeRef;

pub const UNIVERSE: [&str; 3] = ["A", "B", "C"];

/// Every subset of the 3-code universe as a bitmask.
pub fn all_masks() -> impl Iterator<Item = u8> {
    0u8..8
}

pub fn mask_to_set(mask: u8) -> Vec<CodeRef> {
    (0..3)
        .filter(|i| mask & (1 << i) != 0)
        .map(|i| CodeRef::Child(UNIVERSE[i].to_string()))
        .collect()
}

pub fn mask_to_row(mask: u8) -> Vec<u8> {
    (0..3).map(|i| (mask >> i) & 1).collect()
}

fn pop(x: u8) -> u32 {
    x.count_ones()
}

/// Hit rate in percent over paragraphs with a non-empty machine set.
pub fn oracle_hit_rate(m: &[u8], h: &[u8]) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0;
    for (&a, &b) in m.iter().zip(h) {
        if a != 0 {
            sum += pop(a & b) as f64 / pop(a) as f64;
            n += 1;
        }
    }
    (n > 0).then(|| 100.0 * sum / n as f64)
}

/// Mean Simpson, Dice and Jaccard over paragraphs where both sets are
/// non-empty.
pub fn oracle_overlap(m: &[u8], h: &[u8]) -> Option<(f64, f64, f64)> {
    let (mut s, mut d, mut j, mut n) = (0.0, 0.0, 0.0, 0);
    for (&a, &b) in m.iter().zip(h) {
        if a == 0 || b == 0 {
            continue;
        }
        let i = pop(a & b) as f64;
        s += i / pop(a).min(pop(b)) as f64;
        d += 2.0 * i / (pop(a) + pop(b)) as f64;
        j += i / pop(a | b) as f64;
        n += 1;
    }
    (n > 0).then(|| {
        let n = n as f64;
        (s / n, d / n, j / n)
    })
}

pub fn oracle_micro(m: &[u8], h: &[u8]) -> (f64, f64, f64) {
    let tp: u32 = m.iter().zip(h).map(|(&a, &b)| pop(a & b)).sum();
    let fp: u32 = m.iter().zip(h).map(|(&a, &b)| pop(a & !b & 7)).sum();
    let fn_: u32 = m.iter().zip(h).map(|(&a, &b)| pop(!a & b & 7)).sum();
    let div = |a: u32, b: u32| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let p = div(tp, tp + fp);
    let r = div(tp, tp + fn_);
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

/// Cohen's kappa from first principles on two 0/1 vectors.
pub fn oracle_kappa(pred: &[u8], truth: &[u8]) -> f64 {
    let n = pred.len() as f64;
    let agree = pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / n;
    let p1 = pred.iter().filter(|&&x| x == 1).count() as f64 / n;
    let t1 = truth.iter().filter(|&&x| x == 1).count() as f64 / n;
    let pe = p1 * t1 + (1.0 - p1) * (1.0 - t1);
    if pe == 1.0 {
        return if agree == 1.0 { 1.0 } else { 0.0 };
    }
    (agree - pe) / (1.0 - pe)
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Best one-to-one matching of fitted topics to planted topics by total
/// cosine, found by enumerating permutations (K ≤ 6). Returns the cosine
/// of each planted topic with its matched fitted topic.
pub fn aligned_cosines(planted: &[Vec<f64>], fitted: &[Vec<f64>]) -> Vec<f64> {
    assert_eq!(planted.len(), fitted.len());
    assert!(planted.len() <= 6, "permutation search is for small K");
    let sim: Vec<Vec<f64>> = planted
        .iter()
        .map(|p| fitted.iter().map(|f| cosine(p, f)).collect())
        .collect();
    let best = permutations(planted.len())
        .into_iter()
        .max_by(|a, b| {
            let sa: f64 = a.iter().enumerate().map(|(i, &j)| sim[i][j]).sum();
            let sb: f64 = b.iter().enumerate().map(|(i, &j)| sim[i][j]).sum();
            sa.total_cmp(&sb)
        })
        .unwrap();
    best.iter().enumerate().map(|(i, &j)| sim[i][j]).collect()
}

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn test_data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join(name)
}

/// Copy the bundled fixture inputs and pipeline config into `dir`.
pub fn stage_fixture(dir: &Path) -> PathBuf {
    for f in ["corpus.csv", "codebook.csv", "human_labels.csv", "topic_labels.csv", "pipeline.toml"] {
        fs::copy(fixtures_dir().join(f), dir.join(f)).unwrap();
    }
    dir.join("pipeline.toml")
}

/// Golden template with its placeholders replaced by plain string
/// substitution.
pub fn golden(name: &str, slots: &[(&str, &str)]) -> String {
    let mut text = fs::read_to_string(test_data("golden").join(name)).unwrap();
    for (ph, value) in slots {
        assert_eq!(text.matches(ph).count(), 1, "{name} must hold {ph} once");
        text = text.replace(ph, value);
    }
    text
}

pub fn fixture_codebook() -> voicelens::codebook::Codebook {
    voicelens::codebook::load_codebook(fixtures_dir().join("codebook.csv")).unwrap()
}
