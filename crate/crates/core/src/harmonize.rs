//! Label harmonization across sources and levels: child-to-parent mapping,
//! deduplication and one-hot encoding.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{AnnotationRun, Source};
use crate::codebook::{CodeRef, Codebook};
use crate::corpus::Corpus;

#[derive(Debug, Error)]
pub enum HarmonizeError {
    #[error("label `{0}` is not in the codebook")]
    UnknownLabel(String),
    #[error("label `{0}` is outside the code universe")]
    LabelOutsideUniverse(String),
    #[error("operation expects {expected:?}-level labels")]
    WrongLevel { expected: Level },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Original,
    Parent,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Original => "original",
            Level::Parent => "parent",
        }
    }
}

impl std::str::FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "original" | "child" => Ok(Level::Original),
            "parent" => Ok(Level::Parent),
            _ => Err(format!("unknown level `{s}`")),
        }
    }
}

/// Per-paragraph label sets from one source at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledCorpus {
    pub level: Level,
    pub source: Source,
    pub paragraph_ids: Vec<String>,
    pub sets: Vec<Vec<CodeRef>>,
}

impl LabeledCorpus {
    pub fn new(source: Source, paragraph_ids: Vec<String>, sets: Vec<Vec<CodeRef>>) -> Self {
        assert_eq!(paragraph_ids.len(), sets.len());
        LabeledCorpus {
            level: Level::Original,
            source,
            paragraph_ids,
            sets,
        }
    }

    /// Align a run to corpus order. Paragraphs without a record (failures,
    /// unlabeled) get an empty set.
    pub fn from_run(run: &AnnotationRun, corpus: &Corpus) -> Self {
        let by_id: HashMap<&str, &Vec<CodeRef>> = run
            .annotations
            .iter()
            .map(|a| (a.paragraph_id.as_str(), &a.labels))
            .collect();
        let ids: Vec<String> = corpus.ids().map(str::to_string).collect();
        let sets = ids
            .iter()
            .map(|id| by_id.get(id.as_str()).map(|s| (*s).clone()).unwrap_or_default())
            .collect();
        LabeledCorpus::new(run.source, ids, sets)
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn get(&self, paragraph_id: &str) -> Option<&[CodeRef]> {
        self.paragraph_ids
            .iter()
            .position(|p| p == paragraph_id)
            .map(|i| self.sets[i].as_slice())
    }
}

/// Map every label to its parent and drop duplicates, keeping first
/// occurrence. Idempotent.
pub fn to_parent_level(lc: &LabeledCorpus, cb: &Codebook) -> Result<LabeledCorpus, HarmonizeError> {
    let mut sets = Vec::with_capacity(lc.sets.len());
    for set in &lc.sets {
        let mut out: Vec<CodeRef> = Vec::with_capacity(set.len());
        for code in set {
            let parent = cb
                .parent_of(code)
                .map_err(|_| HarmonizeError::UnknownLabel(code.label().to_string()))?;
            let p = CodeRef::Parent(parent.to_string());
            if !out.contains(&p) {
                out.push(p);
            }
        }
        sets.push(out);
    }
    Ok(LabeledCorpus {
        level: Level::Parent,
        source: lc.source,
        paragraph_ids: lc.paragraph_ids.clone(),
        sets,
    })
}

/// Express `lc` at `level`.
pub fn at_level(lc: &LabeledCorpus, cb: &Codebook, level: Level) -> Result<LabeledCorpus, HarmonizeError> {
    match (lc.level, level) {
        (a, b) if a == b => Ok(lc.clone()),
        (Level::Original, Level::Parent) => to_parent_level(lc, cb),
        _ => Err(HarmonizeError::WrongLevel {
            expected: Level::Original,
        }),
    }
}

/// Ordered code universe. Original level: every child code in codebook
/// order followed by the parent codes (parent-only labels are first-class
/// codes at this level) unless `include_parent_only` is false. Parent level:
/// parent codes.
pub fn code_universe(cb: &Codebook, level: Level, include_parent_only: bool) -> Vec<CodeRef> {
    let parents = cb.parents().iter().map(|p| CodeRef::Parent(p.clone()));
    match level {
        Level::Parent => parents.collect(),
        Level::Original => {
            let mut u: Vec<CodeRef> = cb
                .children()
                .iter()
                .map(|c| CodeRef::Child(c.label.clone()))
                .collect();
            if include_parent_only {
                u.extend(parents);
            }
            u
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OneHotMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<CodeRef>,
    pub cells: Vec<Vec<u8>>,
}

impl OneHotMatrix {
    pub fn column(&self, j: usize) -> Vec<u8> {
        self.cells.iter().map(|r| r[j]).collect()
    }

    /// CSV with `paragraph_id` first, then one column per code label.
    pub fn write_csv(&self, out: impl Write) -> Result<(), HarmonizeError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["paragraph_id".to_string()];
        header.extend(self.cols.iter().map(|c| c.label().to_string()));
        w.write_record(&header)?;
        for (id, row) in self.rows.iter().zip(&self.cells) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(u8::to_string));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn one_hot(lc: &LabeledCorpus, universe: &[CodeRef]) -> Result<OneHotMatrix, HarmonizeError> {
    let index: HashMap<&CodeRef, usize> = universe.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let mut cells = Vec::with_capacity(lc.sets.len());
    for set in &lc.sets {
        let mut row = vec![0u8; universe.len()];
        for code in set {
            let j = index
                .get(code)
                .ok_or_else(|| HarmonizeError::LabelOutsideUniverse(code.label().to_string()))?;
            row[*j] = 1;
        }
        cells.push(row);
    }
    Ok(OneHotMatrix {
        rows: lc.paragraph_ids.clone(),
        cols: universe.to_vec(),
        cells,
    })
}

/// Drop labels outside `universe` (used when parent-only codes are excluded
/// from evaluation).
pub fn restrict(lc: &LabeledCorpus, universe: &[CodeRef]) -> LabeledCorpus {
    let mut out = lc.clone();
    for set in &mut out.sets {
        set.retain(|c| universe.contains(c));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cb() -> Codebook {
        Codebook::from_csv_str(
            "Parent,Child,Child_description,Key words\n\
             School finance,Funding formula,,\n\
             School finance,Targeted funds,,\n\
             Staffing resources,Teacher pipeline,,\n",
        )
        .unwrap()
    }

    fn c(s: &str) -> CodeRef {
        CodeRef::Child(s.into())
    }

    fn p(s: &str) -> CodeRef {
        CodeRef::Parent(s.into())
    }

    fn lc(sets: Vec<Vec<CodeRef>>) -> LabeledCorpus {
        let ids = (0..sets.len()).map(|i| format!("p{i}")).collect();
        LabeledCorpus::new(Source::Human, ids, sets)
    }

    #[test]
    fn parent_mapping_dedups() {
        let l = lc(vec![
            vec![c("Funding formula"), c("Targeted funds")],
            vec![],
            vec![p("School finance"), c("Funding formula")],
            vec![c("Teacher pipeline"), c("Funding formula")],
        ]);
        let up = to_parent_level(&l, &cb()).unwrap();
        assert_eq!(up.level, Level::Parent);
        assert_eq!(up.sets[0], vec![p("School finance")]);
        assert!(up.sets[1].is_empty());
        assert_eq!(up.sets[2], vec![p("School finance")]);
        assert_eq!(up.sets[3], vec![p("Staffing resources"), p("School finance")]);
        assert_eq!(to_parent_level(&up, &cb()).unwrap(), up);
    }

    #[test]
    fn unknown_label() {
        let l = lc(vec![vec![c("Nope")]]);
        assert!(matches!(to_parent_level(&l, &cb()), Err(HarmonizeError::UnknownLabel(_))));
    }

    #[test]
    fn one_hot_by_definition() {
        let (a, b) = (c("Funding formula"), c("Targeted funds"));
        let l = lc(vec![vec![a.clone()], vec![a.clone(), b.clone()]]);
        let m = one_hot(&l, &[a.clone(), b.clone()]).unwrap();
        assert_eq!(m.cells, vec![vec![1, 0], vec![1, 1]]);
        assert!(matches!(one_hot(&l, &[a]), Err(HarmonizeError::LabelOutsideUniverse(_))));
    }

    #[test]
    fn universe_layout() {
        let u = code_universe(&cb(), Level::Original, true);
        assert_eq!(u.len(), 5);
        assert_eq!(u[3], p("School finance"));
        assert_eq!(code_universe(&cb(), Level::Original, false).len(), 3);
        assert_eq!(code_universe(&cb(), Level::Parent, true).len(), 2);
    }

    #[test]
    fn csv_export() {
        let l = lc(vec![vec![c("Funding formula")]]);
        let m = one_hot(&l, &code_universe(&cb(), Level::Parent, true)).unwrap_err();
        assert!(matches!(m, HarmonizeError::LabelOutsideUniverse(_)));
        let m = one_hot(&l, &code_universe(&cb(), Level::Original, false)).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "paragraph_id,Funding formula,Targeted funds,Teacher pipeline\np0,1,0,0\n"
        );
    }
}
