//! Row bootstrap with percentile confidence intervals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::binary::{auc_from_counts, confusion2, kappa_from_counts};
use super::{MetricsError, Result};
use crate::codebook::CodeRef;
use crate::harmonize::OneHotMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_low: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_high: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_boot: Option<usize>,
    /// Resamples where the statistic was undefined.
    #[serde(default)]
    pub skipped: usize,
}

impl MetricValue {
    pub fn point(value: f64) -> Self {
        MetricValue {
            value,
            ci_low: None,
            ci_high: None,
            n_boot: None,
            skipped: 0,
        }
    }
}

/// Percentile with linear interpolation between closest ranks. `sorted`
/// must be ascending and non-empty.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64)
}

/// Mean and 2.5/97.5 percentiles of a set of replicate statistics.
pub(crate) fn summarize(stats: &[f64], skipped: usize) -> MetricValue {
    let mut sorted = stats.to_vec();
    sorted.sort_by(f64::total_cmp);
    MetricValue {
        value: stats.iter().sum::<f64>() / stats.len() as f64,
        ci_low: Some(percentile(&sorted, 2.5)),
        ci_high: Some(percentile(&sorted, 97.5)),
        n_boot: Some(stats.len()),
        skipped,
    }
}

/// Resample row indices with replacement `iters` times and evaluate
/// `metric` on each resample. Iteration `i` uses a generator seeded with
/// `seed + i`, so results do not depend on scheduling. Resamples where the
/// metric fails are skipped and counted.
pub fn bootstrap<F>(n_rows: usize, metric: F, iters: usize, seed: u64) -> Result<MetricValue>
where
    F: Fn(&[usize]) -> Result<f64> + Sync,
{
    if n_rows < 2 {
        return Err(MetricsError::TooFewRows(2));
    }
    if iters == 0 {
        return Err(MetricsError::Invalid("bootstrap needs at least one iteration".into()));
    }
    let results: Vec<Result<f64>> = (0..iters)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let idx: Vec<usize> = (0..n_rows).map(|_| rng.gen_range(0..n_rows)).collect();
            metric(&idx)
        })
        .collect();
    let mut stats = Vec::with_capacity(iters);
    let mut last_err = None;
    for r in results {
        match r {
            Ok(v) => stats.push(v),
            Err(e) => last_err = Some(e),
        }
    }
    if stats.is_empty() {
        return Err(last_err.unwrap_or(MetricsError::NoEligibleParagraphs));
    }
    Ok(summarize(&stats, iters - stats.len()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledMetrics {
    pub accuracy: MetricValue,
    pub kappa: MetricValue,
    /// Absent when no resample has both classes in the truth.
    pub auc: Option<MetricValue>,
}

fn check_matrix(m: &OneHotMatrix, h: &OneHotMatrix) -> Result<()> {
    if m.rows != h.rows || m.cols != h.cols {
        return Err(MetricsError::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            m.rows.len(),
            m.cols.len(),
            h.rows.len(),
            h.cols.len()
        )));
    }
    Ok(())
}

fn pooled_counts(m: &OneHotMatrix, h: &OneHotMatrix, idx: &[usize]) -> (u64, u64, u64, u64) {
    let mut c = (0, 0, 0, 0);
    for &i in idx {
        let r = confusion2(&m.cells[i], &h.cells[i]);
        c.0 += r.0;
        c.1 += r.1;
        c.2 += r.2;
        c.3 += r.3;
    }
    c
}

/// Accuracy, kappa and AUC of the pooled cells, bootstrapped over
/// paragraphs.
pub fn pooled_matrix_metrics(
    machine: &OneHotMatrix,
    human: &OneHotMatrix,
    iters: usize,
    seed: u64,
) -> Result<PooledMetrics> {
    check_matrix(machine, human)?;
    if machine.cols.is_empty() {
        return Err(MetricsError::ShapeMismatch("matrix has no columns".into()));
    }
    let n = machine.rows.len();
    let accuracy = bootstrap(
        n,
        |idx| {
            let (tp, fp, fn_, tn) = pooled_counts(machine, human, idx);
            Ok((tp + tn) as f64 / (tp + fp + fn_ + tn) as f64)
        },
        iters,
        seed,
    )?;
    let kappa = bootstrap(
        n,
        |idx| {
            let (tp, fp, fn_, tn) = pooled_counts(machine, human, idx);
            Ok(kappa_from_counts(tp, fp, fn_, tn))
        },
        iters,
        seed,
    )?;
    let auc = match bootstrap(
        n,
        |idx| {
            let (tp, fp, fn_, tn) = pooled_counts(machine, human, idx);
            auc_from_counts(tp, fp, fn_, tn)
        },
        iters,
        seed,
    ) {
        Ok(v) => Some(v),
        Err(MetricsError::SingleClassTruth) => None,
        Err(e) => return Err(e),
    };
    Ok(PooledMetrics {
        accuracy,
        kappa,
        auc,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodewiseMetric {
    pub code: CodeRef,
    /// Paragraphs carrying the code in the truth matrix.
    pub support: usize,
    pub kappa: MetricValue,
    pub auc: Option<MetricValue>,
}

fn column_counts(m: &OneHotMatrix, h: &OneHotMatrix, j: usize, idx: &[usize]) -> (u64, u64, u64, u64) {
    let mut c = (0, 0, 0, 0);
    for &i in idx {
        match (m.cells[i][j] != 0, h.cells[i][j] != 0) {
            (true, true) => c.0 += 1,
            (true, false) => c.1 += 1,
            (false, true) => c.2 += 1,
            (false, false) => c.3 += 1,
        }
    }
    c
}

/// Per-code kappa and AUC bootstrapped over paragraphs. AUC is absent for
/// codes whose truth column has a single class.
pub fn codewise_metrics(
    machine: &OneHotMatrix,
    human: &OneHotMatrix,
    iters: usize,
    seed: u64,
) -> Result<Vec<CodewiseMetric>> {
    check_matrix(machine, human)?;
    let n = machine.rows.len();
    let all: Vec<usize> = (0..n).collect();
    (0..machine.cols.len())
        .into_par_iter()
        .map(|j| {
            let kappa = bootstrap(
                n,
                |idx| {
                    let (tp, fp, fn_, tn) = column_counts(machine, human, j, idx);
                    Ok(kappa_from_counts(tp, fp, fn_, tn))
                },
                iters,
                seed,
            )?;
            let (tp, fp, fn_, tn) = column_counts(machine, human, j, &all);
            let auc = if auc_from_counts(tp, fp, fn_, tn).is_ok() {
                bootstrap(
                    n,
                    |idx| {
                        let (tp, fp, fn_, tn) = column_counts(machine, human, j, idx);
                        auc_from_counts(tp, fp, fn_, tn)
                    },
                    iters,
                    seed,
                )
                .ok()
            } else {
                None
            };
            Ok(CodewiseMetric {
                code: machine.cols[j].clone(),
                support: (tp + fn_) as usize,
                kappa,
                auc,
            })
        })
        .collect()
}
