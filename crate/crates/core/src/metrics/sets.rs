//! Set-overlap statistics over per-paragraph label sets.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bootstrap::{summarize, MetricValue};
use super::{MetricsError, Result};
use crate::harmonize::LabeledCorpus;

fn intersection<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    a.iter().filter(|x| b.contains(x)).count()
}

pub(crate) fn check_aligned(machine: &LabeledCorpus, human: &LabeledCorpus) -> Result<()> {
    if machine.paragraph_ids != human.paragraph_ids {
        return Err(MetricsError::ShapeMismatch(
            "label sets cover different paragraphs".into(),
        ));
    }
    if machine.level != human.level {
        return Err(MetricsError::ShapeMismatch("label sets are at different levels".into()));
    }
    Ok(())
}

/// Percentage of machine labels found in the human set, averaged over
/// paragraphs with a non-empty machine set.
pub fn hit_rate_sets<T: PartialEq>(machine: &[Vec<T>], human: &[Vec<T>]) -> Result<f64> {
    if machine.len() != human.len() {
        return Err(MetricsError::LengthMismatch(machine.len(), human.len()));
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for (m, h) in machine.iter().zip(human) {
        if m.is_empty() {
            continue;
        }
        sum += intersection(m, h) as f64 / m.len() as f64;
        n += 1;
    }
    if n == 0 {
        return Err(MetricsError::NoEligibleParagraphs);
    }
    Ok(100.0 * sum / n as f64)
}

pub fn hit_rate(machine: &LabeledCorpus, human: &LabeledCorpus) -> Result<f64> {
    check_aligned(machine, human)?;
    hit_rate_sets(&machine.sets, &human.sets)
}

/// Hit rate of the machine sets against uniformly permuted human sets,
/// averaged over `repeats` permutations. Repeat `r` draws its permutation
/// from a generator seeded with `rng_seed + r`.
pub fn shuffled_hit_rate_sets<T: PartialEq + Sync>(
    machine: &[Vec<T>],
    human: &[Vec<T>],
    rng_seed: u64,
    repeats: usize,
) -> Result<MetricValue> {
    if machine.len() < 2 {
        return Err(MetricsError::TooFewRows(2));
    }
    if repeats == 0 {
        return Err(MetricsError::Invalid("repeats must be positive".into()));
    }
    hit_rate_sets(machine, human)?;
    let stats: Vec<f64> = (0..repeats)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed.wrapping_add(r as u64));
            let mut perm: Vec<usize> = (0..human.len()).collect();
            perm.shuffle(&mut rng);
            let shuffled: Vec<&Vec<T>> = perm.iter().map(|&j| &human[j]).collect();
            let mut sum = 0.0;
            let mut n = 0usize;
            for (m, h) in machine.iter().zip(shuffled) {
                if !m.is_empty() {
                    sum += intersection(m, h) as f64 / m.len() as f64;
                    n += 1;
                }
            }
            100.0 * sum / n as f64
        })
        .collect();
    Ok(summarize(&stats, 0))
}

pub fn shuffled_hit_rate(
    machine: &LabeledCorpus,
    human: &LabeledCorpus,
    rng_seed: u64,
    repeats: usize,
) -> Result<MetricValue> {
    check_aligned(machine, human)?;
    shuffled_hit_rate_sets(&machine.sets, &human.sets, rng_seed, repeats)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overlap {
    pub simpson: f64,
    pub dice: f64,
    pub jaccard: f64,
    /// Paragraphs where both sets are non-empty.
    pub n: usize,
}

/// Simpson, Dice and Jaccard coefficients for one pair of non-empty sets.
pub fn pair_overlap<T: PartialEq>(m: &[T], h: &[T]) -> (f64, f64, f64) {
    let inter = intersection(m, h) as f64;
    let (a, b) = (m.len() as f64, h.len() as f64);
    let union = a + b - inter;
    (inter / a.min(b), 2.0 * inter / (a + b), inter / union)
}

pub fn overlap_sets<T: PartialEq>(machine: &[Vec<T>], human: &[Vec<T>]) -> Result<Overlap> {
    if machine.len() != human.len() {
        return Err(MetricsError::LengthMismatch(machine.len(), human.len()));
    }
    let (mut s, mut d, mut j, mut n) = (0.0, 0.0, 0.0, 0usize);
    for (m, h) in machine.iter().zip(human) {
        if m.is_empty() || h.is_empty() {
            continue;
        }
        let (a, b, c) = pair_overlap(m, h);
        s += a;
        d += b;
        j += c;
        n += 1;
    }
    if n == 0 {
        return Err(MetricsError::NoEligibleParagraphs);
    }
    let nf = n as f64;
    Ok(Overlap {
        simpson: s / nf,
        dice: d / nf,
        jaccard: j / nf,
        n,
    })
}

pub fn overlap_coefficients(machine: &LabeledCorpus, human: &LabeledCorpus) -> Result<Overlap> {
    check_aligned(machine, human)?;
    overlap_sets(&machine.sets, &human.sets)
}
