//! Model-selection diagnostics: held-out likelihood, coherence,
//! exclusivity, residual dispersion, and the K sweep.

use std::collections::HashSet;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dtm::DocTermMatrix;
use super::gibbs::{fit_lda, LdaConfig, TopicModel};
use super::LdaError;

/// Indices of the `n` largest values, descending, ties by index.
pub(crate) fn top_indices(values: &[f64], n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(n);
    idx
}

pub fn top_words(model: &TopicModel, k: usize, n: usize) -> Result<Vec<String>, LdaError> {
    let row = model.phi.get(k).ok_or(LdaError::IndexOutOfRange(k))?;
    Ok(top_indices(row, n)
        .into_iter()
        .map(|w| model.vocab[w].clone())
        .collect())
}

pub fn top_docs(model: &TopicModel, k: usize, n: usize) -> Result<Vec<String>, LdaError> {
    if k >= model.k {
        return Err(LdaError::IndexOutOfRange(k));
    }
    let col: Vec<f64> = model.theta.iter().map(|r| r[k]).collect();
    Ok(top_indices(&col, n)
        .into_iter()
        .map(|d| model.doc_ids[d].clone())
        .collect())
}

/// Document-completion held-out likelihood: a random `holdout_fraction` of
/// each document's tokens is removed, the model is trained on the rest, and
/// the removed tokens are scored under `sum_k theta_dk * phi_kw`. Returns the
/// mean log probability per held-out token.
pub fn held_out_loglik<F>(
    trainer: F,
    dtm: &DocTermMatrix,
    holdout_fraction: f64,
    seed: u64,
) -> Result<f64, LdaError>
where
    F: Fn(&DocTermMatrix) -> Result<TopicModel, LdaError>,
{
    if !(holdout_fraction > 0.0 && holdout_fraction < 0.5) {
        return Err(LdaError::InvalidHyperparameter(format!(
            "holdout fraction {holdout_fraction} outside (0, 0.5)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_docs = Vec::with_capacity(dtm.n_docs());
    let mut held: Vec<Vec<u32>> = Vec::with_capacity(dtm.n_docs());
    for d in 0..dtm.n_docs() {
        let mut toks = dtm.tokens(d);
        toks.shuffle(&mut rng);
        let n = toks.len();
        let h = if n >= 2 {
            ((holdout_fraction * n as f64).floor() as usize).clamp(1, n - 1)
        } else {
            0
        };
        held.push(toks[..h].to_vec());
        train_docs.push(toks[h..].to_vec());
    }
    let train = DocTermMatrix::from_token_ids(dtm.vocab.clone(), &train_docs, dtm.doc_ids.clone());
    let model = trainer(&train)?;
    let mut ll = 0.0;
    let mut n = 0usize;
    for (d, toks) in held.iter().enumerate() {
        for &w in toks {
            let p: f64 = (0..model.k)
                .map(|k| model.theta[d][k] * model.phi[k][w as usize])
                .sum();
            ll += p.ln();
            n += 1;
        }
    }
    if n == 0 {
        return Err(LdaError::InvalidHyperparameter("no tokens were held out".into()));
    }
    Ok(ll / n as f64)
}

/// Mimno coherence of each topic's `top_n` words:
/// `sum_{i>j} ln((D(w_i, w_j) + 1) / D(w_j))` with document frequencies `D`.
pub fn semantic_coherence(model: &TopicModel, dtm: &DocTermMatrix, top_n: usize) -> Vec<f64> {
    let doc_sets: Vec<HashSet<u32>> = dtm
        .docs
        .iter()
        .map(|d| d.iter().map(|&(w, _)| w).collect())
        .collect();
    let df = |w: u32| doc_sets.iter().filter(|s| s.contains(&w)).count();
    let co = |a: u32, b: u32| doc_sets.iter().filter(|s| s.contains(&a) && s.contains(&b)).count();
    model
        .phi
        .iter()
        .map(|row| {
            let top: Vec<u32> = top_indices(row, top_n).into_iter().map(|w| w as u32).collect();
            let mut c = 0.0;
            for i in 1..top.len() {
                for j in 0..i {
                    let d_j = df(top[j]).max(1) as f64;
                    c += ((co(top[i], top[j]) as f64 + 1.0) / d_j).ln();
                }
            }
            c
        })
        .collect()
}

/// Fraction of `values` less than or equal to each entry.
fn ecdf(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    values
        .iter()
        .map(|v| sorted.partition_point(|x| x <= v) as f64 / n)
        .collect()
}

/// FREX score per topic: for each of the topic's `top_n` words, the weighted
/// harmonic mean of its exclusivity (phi normalized across topics) and its
/// frequency rank within the topic; averaged over the words.
pub fn exclusivity(model: &TopicModel, top_n: usize, frex_weight: f64) -> Vec<f64> {
    let v = model.vocab.len();
    let col_sums: Vec<f64> = (0..v).map(|w| model.phi.iter().map(|r| r[w]).sum()).collect();
    model
        .phi
        .iter()
        .map(|row| {
            let excl: Vec<f64> = row
                .iter()
                .zip(&col_sums)
                .map(|(p, s)| if *s > 0.0 { p / s } else { 0.0 })
                .collect();
            let fr_rank = ecdf(row);
            let top = top_indices(row, top_n);
            let total: f64 = top
                .iter()
                .map(|&w| {
                    let ex_part = if frex_weight > 0.0 { frex_weight / excl[w] } else { 0.0 };
                    let fr_part = if frex_weight < 1.0 { (1.0 - frex_weight) / fr_rank[w] } else { 0.0 };
                    1.0 / (ex_part + fr_part)
                })
                .sum();
            total / top.len() as f64
        })
        .collect()
}

/// Pearson dispersion of observed counts against model-expected counts,
/// `sum (n_dw - N_d p_dw)^2 / (N_d p_dw)` over `sum_d (V - 1)` degrees of
/// freedom; empty documents contribute neither terms nor degrees of freedom.
/// Near 1 when the model explains the data.
pub fn residual_dispersion(model: &TopicModel, dtm: &DocTermMatrix) -> f64 {
    let v = dtm.n_terms();
    let mut chi2 = 0.0;
    let mut dof = 0usize;
    for d in 0..dtm.n_docs() {
        let n_d = dtm.doc_len(d) as f64;
        if n_d == 0.0 {
            continue;
        }
        let row = dtm.dense(d);
        for (w, &obs) in row.iter().enumerate() {
            let p: f64 = (0..model.k).map(|k| model.theta[d][k] * model.phi[k][w]).sum();
            let expected = n_d * p;
            if expected > 0.0 {
                chi2 += (obs as f64 - expected).powi(2) / expected;
            }
        }
        dof += v - 1;
    }
    if dof == 0 {
        0.0
    } else {
        chi2 / dof as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub k: usize,
    pub heldout_loglik: f64,
    pub residual_dispersion: f64,
    pub mean_semantic_coherence: f64,
    pub mean_exclusivity: f64,
    pub train_loglik: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchOptions {
    pub holdout_fraction: f64,
    pub top_n: usize,
    pub frex_weight: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            holdout_fraction: 0.1,
            top_n: 10,
            frex_weight: 0.7,
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Fit each K with the same seed and hyperparameter policy and compute the
/// diagnostics. Fits run in parallel; rows come back in `k_list` order.
pub fn search_k(
    dtm: &DocTermMatrix,
    k_list: &[usize],
    base: &LdaConfig,
    opts: &SearchOptions,
) -> Result<Vec<DiagnosticsRow>, LdaError> {
    if k_list.is_empty() {
        return Err(LdaError::InvalidHyperparameter("k_list is empty".into()));
    }
    k_list
        .par_iter()
        .map(|&k| {
            let cfg = base.with_k(k);
            let model = fit_lda(dtm, &cfg)?;
            let heldout = held_out_loglik(|t| fit_lda(t, &cfg), dtm, opts.holdout_fraction, base.seed)?;
            Ok(DiagnosticsRow {
                k,
                heldout_loglik: heldout,
                residual_dispersion: residual_dispersion(&model, dtm),
                mean_semantic_coherence: mean(&semantic_coherence(&model, dtm, opts.top_n)),
                mean_exclusivity: mean(&exclusivity(&model, opts.top_n, opts.frex_weight)),
                train_loglik: model.loglik_trace.last().map_or(0.0, |t| t.1),
            })
        })
        .collect()
}

pub fn write_diagnostics_csv(rows: &[DiagnosticsRow], out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(phi: Vec<Vec<f64>>, theta: Vec<Vec<f64>>, vocab: &[&str]) -> TopicModel {
        TopicModel {
            k: phi.len(),
            vocab: vocab.iter().map(|s| s.to_string()).collect(),
            doc_ids: (0..theta.len()).map(|i| format!("d{i}")).collect(),
            phi,
            theta,
            alpha: 0.1,
            beta: 0.01,
            iterations: 0,
            burn_in: 0,
            seed: 0,
            loglik_trace: Vec::new(),
        }
    }

    #[test]
    fn top_words_order_and_clamp() {
        let m = model(vec![vec![0.2, 0.5, 0.3]], vec![vec![1.0]], &["a", "b", "c"]);
        assert_eq!(top_words(&m, 0, 10).unwrap(), vec!["b", "c", "a"]);
        assert!(matches!(top_words(&m, 1, 3), Err(LdaError::IndexOutOfRange(1))));
    }

    #[test]
    fn coherence_formula() {
        let vocab: Vec<String> = vec!["x".into(), "y".into()];
        let together: Vec<Vec<u32>> = (0..10).map(|_| vec![0, 1]).collect();
        let dtm = DocTermMatrix::from_token_ids(vocab.clone(), &together, (0..10).map(|i| i.to_string()).collect());
        let m = model(vec![vec![0.6, 0.4]], vec![vec![1.0]; 10], &["x", "y"]);
        assert!((semantic_coherence(&m, &dtm, 2)[0] - (11.0f64 / 10.0).ln()).abs() < 1e-12);
        let apart: Vec<Vec<u32>> = (0..20).map(|i| vec![(i % 2) as u32]).collect();
        let dtm = DocTermMatrix::from_token_ids(vocab, &apart, (0..20).map(|i| i.to_string()).collect());
        let m = model(vec![vec![0.6, 0.4]], vec![vec![1.0]; 20], &["x", "y"]);
        assert!((semantic_coherence(&m, &dtm, 2)[0] - (0.1f64).ln()).abs() < 1e-12);
        assert_eq!(semantic_coherence(&m, &dtm, 1)[0], 0.0);
    }

    #[test]
    fn exclusivity_limits() {
        let single = model(vec![vec![0.5, 0.3, 0.2]], vec![vec![1.0]], &["a", "b", "c"]);
        assert_eq!(exclusivity(&single, 3, 1.0), vec![1.0]);
        let disjoint = model(
            vec![vec![0.5, 0.5, 0.0, 0.0], vec![0.0, 0.0, 0.5, 0.5]],
            vec![vec![0.5, 0.5]],
            &["a", "b", "c", "d"],
        );
        let same = model(
            vec![vec![0.5, 0.5, 0.0, 0.0], vec![0.5, 0.5, 0.0, 0.0]],
            vec![vec![0.5, 0.5]],
            &["a", "b", "c", "d"],
        );
        let m = |x: Vec<f64>| x.iter().sum::<f64>() / x.len() as f64;
        assert!(m(exclusivity(&disjoint, 2, 0.7)) > m(exclusivity(&same, 2, 0.7)));
    }
}
