//! Binary-vector and one-hot matrix agreement statistics.

use serde::{Deserialize, Serialize};

use super::{MetricsError, Result};

fn check_len(a: &[u8], b: &[u8]) -> Result<()> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(MetricsError::TooFewRows(1));
    }
    Ok(())
}

/// (tp, fp, fn, tn) counts.
pub fn confusion2(pred: &[u8], truth: &[u8]) -> (u64, u64, u64, u64) {
    let mut c = (0, 0, 0, 0);
    for (&p, &t) in pred.iter().zip(truth) {
        match (p != 0, t != 0) {
            (true, true) => c.0 += 1,
            (true, false) => c.1 += 1,
            (false, true) => c.2 += 1,
            (false, false) => c.3 += 1,
        }
    }
    c
}

pub fn accuracy(pred: &[u8], truth: &[u8]) -> Result<f64> {
    check_len(pred, truth)?;
    let (tp, _, _, tn) = confusion2(pred, truth);
    Ok((tp + tn) as f64 / pred.len() as f64)
}

/// Kappa from 2×2 counts. When chance agreement is 1 the result is 1 for
/// perfect observed agreement and 0 otherwise.
pub fn kappa_from_counts(tp: u64, fp: u64, fn_: u64, tn: u64) -> f64 {
    let n = (tp + fp + fn_ + tn) as f64;
    let p_o = (tp + tn) as f64 / n;
    let pred_pos = (tp + fp) as f64 / n;
    let true_pos = (tp + fn_) as f64 / n;
    let p_e = pred_pos * true_pos + (1.0 - pred_pos) * (1.0 - true_pos);
    degenerate_kappa(p_o, p_e)
}

pub(crate) fn degenerate_kappa(p_o: f64, p_e: f64) -> f64 {
    if (1.0 - p_e).abs() < 1e-15 {
        if (1.0 - p_o).abs() < 1e-15 {
            1.0
        } else {
            0.0
        }
    } else {
        (p_o - p_e) / (1.0 - p_e)
    }
}

pub fn cohen_kappa(pred: &[u8], truth: &[u8]) -> Result<f64> {
    check_len(pred, truth)?;
    let (tp, fp, fn_, tn) = confusion2(pred, truth);
    Ok(kappa_from_counts(tp, fp, fn_, tn))
}

/// AUC of hard predictions: the single-point ROC gives (TPR + TNR) / 2.
pub fn auc_from_counts(tp: u64, fp: u64, fn_: u64, tn: u64) -> Result<f64> {
    if tp + fn_ == 0 || fp + tn == 0 {
        return Err(MetricsError::SingleClassTruth);
    }
    let tpr = tp as f64 / (tp + fn_) as f64;
    let tnr = tn as f64 / (tn + fp) as f64;
    Ok((tpr + tnr) / 2.0)
}

pub fn auc_binary(pred: &[u8], truth: &[u8]) -> Result<f64> {
    check_len(pred, truth)?;
    let (tp, fp, fn_, tn) = confusion2(pred, truth);
    auc_from_counts(tp, fp, fn_, tn)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

impl Prf {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64) -> Prf {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf {
            precision,
            recall,
            f1,
        }
    }
}

fn check_shape(m: &[Vec<u8>], h: &[Vec<u8>]) -> Result<()> {
    if m.len() != h.len() || m.iter().zip(h).any(|(a, b)| a.len() != b.len()) {
        return Err(MetricsError::ShapeMismatch(format!(
            "{} vs {} rows or ragged columns",
            m.len(),
            h.len()
        )));
    }
    Ok(())
}

/// Precision, recall and F1 with TP/FP/FN pooled over every cell.
pub fn micro_prf(machine: &[Vec<u8>], human: &[Vec<u8>]) -> Result<Prf> {
    check_shape(machine, human)?;
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (m, h) in machine.iter().zip(human) {
        let c = confusion2(m, h);
        tp += c.0;
        fp += c.1;
        fn_ += c.2;
    }
    Ok(Prf::from_counts(tp, fp, fn_))
}

/// Unweighted mean over columns of per-column precision, recall and F1.
pub fn macro_prf(machine: &[Vec<u8>], human: &[Vec<u8>]) -> Result<Prf> {
    check_shape(machine, human)?;
    let cols = machine.first().map_or(0, Vec::len);
    if cols == 0 {
        return Ok(Prf::from_counts(0, 0, 0));
    }
    let (mut p, mut r, mut f) = (0.0, 0.0, 0.0);
    for j in 0..cols {
        let mc: Vec<u8> = machine.iter().map(|row| row[j]).collect();
        let hc: Vec<u8> = human.iter().map(|row| row[j]).collect();
        let (tp, fp, fn_, _) = confusion2(&mc, &hc);
        let prf = Prf::from_counts(tp, fp, fn_);
        p += prf.precision;
        r += prf.recall;
        f += prf.f1;
    }
    let c = cols as f64;
    Ok(Prf {
        precision: p / c,
        recall: r / c,
        f1: f / c,
    })
}
