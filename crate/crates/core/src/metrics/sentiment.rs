//! Three-way sentiment agreement.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::binary::degenerate_kappa;
use super::{MetricsError, Result};
use crate::annotation::SentimentLabel;
use crate::codebook::CodeRef;
use crate::harmonize::LabeledCorpus;

/// Rows are human labels, columns machine labels, both in
/// Positive, Negative, Neutral order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix3(pub [[u64; 3]; 3]);

impl ConfusionMatrix3 {
    pub fn total(&self) -> u64 {
        self.0.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..3).map(|i| self.0[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total() as f64
    }

    /// Multiclass Cohen's kappa with marginal-product chance agreement.
    pub fn kappa(&self) -> f64 {
        let n = self.total() as f64;
        let p_o = self.trace() as f64 / n;
        let p_e: f64 = (0..3)
            .map(|k| {
                let row: u64 = self.0[k].iter().sum();
                let col: u64 = (0..3).map(|i| self.0[i][k]).sum();
                (row as f64 / n) * (col as f64 / n)
            })
            .sum();
        degenerate_kappa(p_o, p_e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentAgreement {
    pub matrix: ConfusionMatrix3,
    pub accuracy: f64,
    pub kappa: f64,
    pub n: usize,
}

/// Compare machine sentiment with human sentiment on every human-labeled
/// paragraph.
pub fn sentiment_confusion(
    machine: &[(String, SentimentLabel)],
    human: &[(String, SentimentLabel)],
) -> Result<SentimentAgreement> {
    let by_id: HashMap<&str, SentimentLabel> =
        machine.iter().map(|(id, l)| (id.as_str(), *l)).collect();
    let mut m = ConfusionMatrix3::default();
    for (id, h) in human {
        let p = by_id
            .get(id.as_str())
            .ok_or_else(|| MetricsError::MissingAnnotation(id.clone()))?;
        m.0[h.index()][p.index()] += 1;
    }
    if m.total() == 0 {
        return Err(MetricsError::NoEligibleParagraphs);
    }
    Ok(SentimentAgreement {
        matrix: m,
        accuracy: m.accuracy(),
        kappa: m.kappa(),
        n: human.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThemeAgreement {
    pub code: CodeRef,
    pub n: usize,
    pub agreement_pct: f64,
}

/// For each code, the percentage of its human-labeled paragraphs where the
/// machine sentiment equals the human sentiment. Codes appear in order of
/// first use; paragraphs missing either sentiment are ignored.
pub fn agreement_by_theme(
    machine: &[(String, SentimentLabel)],
    human: &[(String, SentimentLabel)],
    human_themes: &LabeledCorpus,
) -> Vec<ThemeAgreement> {
    let m: HashMap<&str, SentimentLabel> = machine.iter().map(|(i, l)| (i.as_str(), *l)).collect();
    let h: HashMap<&str, SentimentLabel> = human.iter().map(|(i, l)| (i.as_str(), *l)).collect();
    let mut order: Vec<CodeRef> = Vec::new();
    let mut tallies: HashMap<CodeRef, (usize, usize)> = HashMap::new();
    for (id, set) in human_themes.paragraph_ids.iter().zip(&human_themes.sets) {
        let (Some(a), Some(b)) = (m.get(id.as_str()), h.get(id.as_str())) else {
            continue;
        };
        for code in set {
            let t = tallies.entry(code.clone()).or_insert_with(|| {
                order.push(code.clone());
                (0, 0)
            });
            t.0 += 1;
            t.1 += usize::from(a == b);
        }
    }
    order
        .into_iter()
        .map(|code| {
            let (n, agree) = tallies[&code];
            ThemeAgreement {
                code,
                n,
                agreement_pct: 100.0 * agree as f64 / n as f64,
            }
        })
        .collect()
}
