//! Descriptive outputs: code frequency tables and sentiment distributions,
//! overall and by stakeholder role.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::annotation::SentimentLabel;
use crate::codebook::{CodeRef, Codebook};
use crate::corpus::{Corpus, RoleGroup};
use crate::harmonize::LabeledCorpus;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub parent_label: String,
    /// Parent-only labels for this parent.
    pub parent_count: usize,
    pub parent_pct: f64,
    /// Empty for a parent without children.
    pub child_label: String,
    pub child_count: usize,
    pub child_pct: f64,
}

/// Label frequencies with percentages over all assigned labels. Rows are
/// sorted by child percentage, descending, ties in codebook order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub total_labels: usize,
    pub rows: Vec<FrequencyRow>,
}

impl FrequencyTable {
    pub fn child_pct_sum(&self) -> f64 {
        self.rows.iter().map(|r| r.child_pct).sum()
    }

    /// Percentage of labels that are parent-only codes.
    pub fn parent_only_pct(&self) -> f64 {
        let mut seen = Vec::new();
        let mut total = 0.0;
        for r in &self.rows {
            if !seen.contains(&&r.parent_label) {
                seen.push(&r.parent_label);
                total += r.parent_pct;
            }
        }
        total
    }
}

fn pct(n: usize, total: usize) -> f64 {
    100.0 * n as f64 / total as f64
}

fn table_from_sets<'a>(sets: impl Iterator<Item = &'a Vec<CodeRef>>, cb: &Codebook) -> FrequencyTable {
    let mut counts: HashMap<&CodeRef, usize> = HashMap::new();
    let mut total = 0;
    for set in sets {
        for code in set {
            *counts.entry(code).or_default() += 1;
            total += 1;
        }
    }
    if total == 0 {
        return FrequencyTable::default();
    }
    let parent_count = |p: &str| counts.get(&CodeRef::Parent(p.to_string())).copied().unwrap_or(0);
    let mut rows = Vec::new();
    for parent in cb.parents() {
        let pc = parent_count(parent);
        let mut any = false;
        for child in cb.children_of(parent) {
            any = true;
            let cc = counts.get(&CodeRef::Child(child.label.clone())).copied().unwrap_or(0);
            rows.push(FrequencyRow {
                parent_label: parent.clone(),
                parent_count: pc,
                parent_pct: pct(pc, total),
                child_label: child.label.clone(),
                child_count: cc,
                child_pct: pct(cc, total),
            });
        }
        if !any {
            rows.push(FrequencyRow {
                parent_label: parent.clone(),
                parent_count: pc,
                parent_pct: pct(pc, total),
                child_label: String::new(),
                child_count: 0,
                child_pct: 0.0,
            });
        }
    }
    rows.sort_by(|a, b| b.child_count.cmp(&a.child_count));
    FrequencyTable {
        total_labels: total,
        rows,
    }
}

pub fn frequency_table(lc: &LabeledCorpus, cb: &Codebook) -> FrequencyTable {
    table_from_sets(lc.sets.iter(), cb)
}

/// One table per role group present in the corpus, each with its own
/// denominator.
pub fn frequency_by_role(lc: &LabeledCorpus, cb: &Codebook, corpus: &Corpus) -> Vec<(RoleGroup, FrequencyTable)> {
    RoleGroup::ALL
        .iter()
        .filter_map(|&role| {
            let sets: Vec<&Vec<CodeRef>> = lc
                .paragraph_ids
                .iter()
                .zip(&lc.sets)
                .filter(|(id, _)| corpus.get(id).is_some_and(|p| p.role_group == role))
                .map(|(_, s)| s)
                .collect();
            (!sets.is_empty()).then(|| (role, table_from_sets(sets.into_iter(), cb)))
        })
        .collect()
}

pub fn write_frequency_csv(tables: &[(String, &FrequencyTable)], out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "group",
        "parent_label",
        "parent_count",
        "parent_pct",
        "child_label",
        "child_count",
        "child_pct",
    ])?;
    for (group, t) in tables {
        for r in &t.rows {
            w.write_record([
                group.clone(),
                r.parent_label.clone(),
                r.parent_count.to_string(),
                format!("{:.2}", r.parent_pct),
                r.child_label.clone(),
                r.child_count.to_string(),
                format!("{:.2}", r.child_pct),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentThemeRow {
    /// `All` or a role group name.
    pub group: String,
    pub code: CodeRef,
    pub n: usize,
    pub positive: f64,
    pub negative: f64,
    pub neutral: f64,
}

fn sentiment_rows(
    group: &str,
    sent: &HashMap<&str, SentimentLabel>,
    themes: &LabeledCorpus,
    keep: impl Fn(&str) -> bool,
) -> Vec<SentimentThemeRow> {
    let mut order: Vec<&CodeRef> = Vec::new();
    let mut counts: HashMap<&CodeRef, [usize; 3]> = HashMap::new();
    for (id, set) in themes.paragraph_ids.iter().zip(&themes.sets) {
        if !keep(id) {
            continue;
        }
        let Some(s) = sent.get(id.as_str()) else { continue };
        for code in set {
            let c = counts.entry(code).or_insert_with(|| {
                order.push(code);
                [0; 3]
            });
            c[s.index()] += 1;
        }
    }
    order
        .into_iter()
        .map(|code| {
            let c = counts[code];
            let n: usize = c.iter().sum();
            let f = |i: usize| c[i] as f64 / n as f64;
            SentimentThemeRow {
                group: group.to_string(),
                code: code.clone(),
                n,
                positive: f(SentimentLabel::Positive.index()),
                negative: f(SentimentLabel::Negative.index()),
                neutral: f(SentimentLabel::Neutral.index()),
            }
        })
        .collect()
}

/// Sentiment distribution over the paragraphs carrying each theme; with
/// `corpus`, additionally one block per role group.
pub fn sentiment_report(
    sent: &[(String, SentimentLabel)],
    themes: &LabeledCorpus,
    corpus: Option<&Corpus>,
) -> Vec<SentimentThemeRow> {
    let map: HashMap<&str, SentimentLabel> = sent.iter().map(|(i, l)| (i.as_str(), *l)).collect();
    let mut rows = sentiment_rows("All", &map, themes, |_| true);
    if let Some(corpus) = corpus {
        for role in RoleGroup::ALL {
            rows.extend(sentiment_rows(role.as_str(), &map, themes, |id| {
                corpus.get(id).is_some_and(|p| p.role_group == role)
            }));
        }
    }
    rows
}

pub fn write_sentiment_csv(rows: &[SentimentThemeRow], out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["group", "level", "code", "n", "positive", "negative", "neutral"])?;
    for r in rows {
        w.write_record([
            r.group.clone(),
            r.code.level().to_string(),
            r.code.label().to_string(),
            r.n.to_string(),
            format!("{:.4}", r.positive),
            format!("{:.4}", r.negative),
            format!("{:.4}", r.neutral),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::Source;

    fn cb() -> Codebook {
        Codebook::from_csv_str(
            "Parent,Child,Child_description,Key words\n\
             School finance,Funding formula,,\n\
             School finance,Levy,,\n\
             Staffing resources,Teacher pipeline,,\n",
        )
        .unwrap()
    }

    fn lc(sets: Vec<Vec<CodeRef>>) -> LabeledCorpus {
        let ids = (0..sets.len()).map(|i| format!("p{i}")).collect();
        LabeledCorpus::new(Source::Human, ids, sets)
    }

    #[test]
    fn percentages_over_total_labels() {
        let a = CodeRef::Child("Levy".into());
        let b = CodeRef::Child("Teacher pipeline".into());
        let p = CodeRef::Parent("School finance".into());
        let t = frequency_table(&lc(vec![vec![a.clone(), b], vec![a, p]]), &cb());
        assert_eq!(t.total_labels, 4);
        assert_eq!(t.rows[0].child_label, "Levy");
        assert_eq!(t.rows[0].child_pct, 50.0);
        assert_eq!(t.rows[0].parent_pct, 25.0);
        assert_eq!(t.rows.len(), 3);
        assert!((t.child_pct_sum() + t.parent_only_pct() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn empty_labels_give_empty_table() {
        assert!(frequency_table(&lc(vec![vec![], vec![]]), &cb()).rows.is_empty());
    }

    #[test]
    fn sentiment_distribution() {
        let a = CodeRef::Child("Levy".into());
        let themes = lc(vec![vec![a.clone()], vec![a.clone()], vec![]]);
        let sent = vec![
            ("p0".to_string(), SentimentLabel::Positive),
            ("p1".to_string(), SentimentLabel::Negative),
            ("p2".to_string(), SentimentLabel::Neutral),
        ];
        let rows = sentiment_report(&sent, &themes, None);
        assert_eq!(rows.len(), 1);
        assert_eq!((rows[0].positive, rows[0].negative, rows[0].neutral), (0.5, 0.5, 0.0));
    }
}
