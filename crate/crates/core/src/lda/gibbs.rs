//! Collapsed Gibbs sampling for LDA.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dtm::DocTermMatrix;
use super::LdaError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LdaConfig {
    pub k: usize,
    /// Symmetric document-topic prior; `None` means `50 / k`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Record the training log-likelihood every this many iterations.
    pub trace_every: usize,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            k: 30,
            alpha: None,
            beta: 0.01,
            iterations: 2000,
            burn_in: 1000,
            seed: 0,
            trace_every: 50,
        }
    }
}

impl LdaConfig {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.k as f64)
    }

    pub fn with_k(&self, k: usize) -> Self {
        LdaConfig { k, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), LdaError> {
        let bad = |m: String| Err(LdaError::InvalidHyperparameter(m));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if !(self.alpha() > 0.0) || !self.alpha().is_finite() {
            return bad(format!("alpha must be positive, got {}", self.alpha()));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        if self.iterations <= self.burn_in {
            return bad(format!(
                "iterations ({}) must exceed burn_in ({})",
                self.iterations, self.burn_in
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub k: usize,
    pub vocab: Vec<String>,
    pub doc_ids: Vec<String>,
    /// K × V topic-term probabilities.
    pub phi: Vec<Vec<f64>>,
    /// D × K document-topic proportions.
    pub theta: Vec<Vec<f64>>,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// `(iteration, per-token log-likelihood)` pairs.
    pub loglik_trace: Vec<(usize, f64)>,
}

impl TopicModel {
    /// Per-token log-likelihood of `dtm` under this model's phi and theta.
    pub fn loglik(&self, dtm: &DocTermMatrix) -> f64 {
        let mut ll = 0.0;
        let mut n = 0usize;
        for (d, doc) in dtm.docs.iter().enumerate() {
            for &(w, c) in doc {
                let p: f64 = (0..self.k).map(|k| self.theta[d][k] * self.phi[k][w as usize]).sum();
                ll += c as f64 * p.ln();
                n += c as usize;
            }
        }
        if n == 0 {
            0.0
        } else {
            ll / n as f64
        }
    }
}

struct State {
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    docs: Vec<Vec<u32>>,
    z: Vec<Vec<u16>>,
    n_dk: Vec<Vec<u32>>,
    n_kw: Vec<Vec<u32>>,
    n_k: Vec<u32>,
}

impl State {
    fn theta_row(&self, d: usize, out: &mut [f64]) {
        let n_d = self.docs[d].len() as f64;
        let denom = n_d + self.k as f64 * self.alpha;
        for (k, o) in out.iter_mut().enumerate() {
            *o = (self.n_dk[d][k] as f64 + self.alpha) / denom;
        }
    }

    fn phi_value(&self, k: usize, w: usize) -> f64 {
        (self.n_kw[k][w] as f64 + self.beta) / (self.n_k[k] as f64 + self.v as f64 * self.beta)
    }

    fn loglik(&self) -> f64 {
        let mut theta = vec![0.0; self.k];
        let mut ll = 0.0;
        let mut n = 0usize;
        for (d, doc) in self.docs.iter().enumerate() {
            self.theta_row(d, &mut theta);
            for &w in doc {
                let p: f64 = (0..self.k).map(|k| theta[k] * self.phi_value(k, w as usize)).sum();
                ll += p.ln();
                n += 1;
            }
        }
        if n == 0 {
            0.0
        } else {
            ll / n as f64
        }
    }
}

/// Fit LDA by collapsed Gibbs sampling. Phi and theta are posterior means
/// accumulated over every post-burn-in sweep. Fully determined by the seed.
pub fn fit_lda(dtm: &DocTermMatrix, cfg: &LdaConfig) -> Result<TopicModel, LdaError> {
    cfg.validate()?;
    if cfg.k > u16::MAX as usize {
        return Err(LdaError::InvalidHyperparameter("k too large".into()));
    }
    let (k, v, n_docs) = (cfg.k, dtm.n_terms(), dtm.n_docs());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let docs: Vec<Vec<u32>> = (0..n_docs).map(|d| dtm.tokens(d)).collect();
    let mut st = State {
        k,
        v,
        alpha: cfg.alpha(),
        beta: cfg.beta,
        z: Vec::with_capacity(n_docs),
        n_dk: vec![vec![0; k]; n_docs],
        n_kw: vec![vec![0; v]; k],
        n_k: vec![0; k],
        docs,
    };
    for d in 0..n_docs {
        let zs: Vec<u16> = st.docs[d].iter().map(|_| rng.gen_range(0..k) as u16).collect();
        for (&w, &t) in st.docs[d].iter().zip(&zs) {
            st.n_dk[d][t as usize] += 1;
            st.n_kw[t as usize][w as usize] += 1;
            st.n_k[t as usize] += 1;
        }
        st.z.push(zs);
    }

    let vbeta = v as f64 * st.beta;
    let mut p = vec![0.0f64; k];
    let mut phi_sum = vec![vec![0.0f64; v]; k];
    let mut theta_sum = vec![vec![0.0f64; k]; n_docs];
    let mut theta_buf = vec![0.0; k];
    let mut trace = Vec::new();

    for it in 0..cfg.iterations {
        for d in 0..n_docs {
            for i in 0..st.docs[d].len() {
                let w = st.docs[d][i] as usize;
                let old = st.z[d][i] as usize;
                st.n_dk[d][old] -= 1;
                st.n_kw[old][w] -= 1;
                st.n_k[old] -= 1;
                let mut total = 0.0;
                for t in 0..k {
                    total += (st.n_dk[d][t] as f64 + st.alpha) * (st.n_kw[t][w] as f64 + st.beta)
                        / (st.n_k[t] as f64 + vbeta);
                    p[t] = total;
                }
                let u = rng.gen::<f64>() * total;
                let new = p.iter().position(|&c| u < c).unwrap_or(k - 1);
                st.z[d][i] = new as u16;
                st.n_dk[d][new] += 1;
                st.n_kw[new][w] += 1;
                st.n_k[new] += 1;
            }
        }
        if it >= cfg.burn_in {
            for (t, row) in phi_sum.iter_mut().enumerate() {
                for (w, x) in row.iter_mut().enumerate() {
                    *x += st.phi_value(t, w);
                }
            }
            for (d, row) in theta_sum.iter_mut().enumerate() {
                st.theta_row(d, &mut theta_buf);
                for (x, y) in row.iter_mut().zip(&theta_buf) {
                    *x += y;
                }
            }
        }
        let every = cfg.trace_every.max(1);
        if (it + 1) % every == 0 || it + 1 == cfg.iterations {
            trace.push((it + 1, st.loglik()));
        }
    }

    let normalize = |rows: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        rows.into_iter()
            .map(|r| {
                let s: f64 = r.iter().sum();
                r.into_iter().map(|x| x / s).collect()
            })
            .collect()
    };
    Ok(TopicModel {
        k,
        vocab: dtm.vocab.clone(),
        doc_ids: dtm.doc_ids.clone(),
        phi: normalize(phi_sum),
        theta: normalize(theta_sum),
        alpha: st.alpha,
        beta: st.beta,
        iterations: cfg.iterations,
        burn_in: cfg.burn_in,
        seed: cfg.seed,
        loglik_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_topic() -> DocTermMatrix {
        let vocab: Vec<String> = (0..6).map(|i| format!("w{i}")).collect();
        let docs: Vec<Vec<u32>> = (0..40)
            .map(|d| {
                let base = if d % 2 == 0 { 0 } else { 3 };
                (0..20).map(|i| base + (i % 3) as u32).collect()
            })
            .collect();
        DocTermMatrix::from_token_ids(vocab, &docs, (0..40).map(|i| i.to_string()).collect())
    }

    fn cfg(k: usize) -> LdaConfig {
        LdaConfig {
            k,
            alpha: Some(0.1),
            iterations: 200,
            burn_in: 100,
            seed: 7,
            ..Default::default()
        }
    }

    #[test]
    fn simplex_and_determinism() {
        let m = fit_lda(&two_topic(), &cfg(4)).unwrap();
        for row in m.phi.iter().chain(&m.theta) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&x| x >= 0.0));
        }
        assert_eq!(m, fit_lda(&two_topic(), &cfg(4)).unwrap());
    }

    #[test]
    fn separates_disjoint_vocabularies() {
        let m = fit_lda(&two_topic(), &cfg(2)).unwrap();
        for row in &m.phi {
            let a: f64 = row[..3].iter().sum();
            assert!(a > 0.95 || a < 0.05, "{row:?}");
        }
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        assert!(fit_lda(&two_topic(), &LdaConfig { k: 0, ..cfg(2) }).is_err());
        assert!(fit_lda(&two_topic(), &LdaConfig { beta: 0.0, ..cfg(2) }).is_err());
        assert!(fit_lda(&two_topic(), &LdaConfig { burn_in: 200, ..cfg(2) }).is_err());
    }
}
