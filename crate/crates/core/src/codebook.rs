//! Two-level hierarchical codebook (parent themes with child codes).

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::normalize_label;

#[derive(Debug, Error)]
pub enum CodebookError {
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("duplicate child label `{0}`")]
    DuplicateChildLabel(String),
    #[error("child `{0}` has a blank parent cell")]
    OrphanChild(String),
    #[error("child `{child}` refers to unknown parent `{parent}`")]
    UnknownParent { child: String, parent: String },
    #[error("keyword list for `{0}` contains an empty keyword")]
    EmptyKeyword(String),
    #[error("unknown {level} label `{label}`")]
    UnknownLabel { level: CodeLevel, label: String },
    #[error("parse error at line {line}: {message}")]
    ParseError { line: u64, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CodebookError>;

/// Exact CSV header of a codebook file.
pub const CODEBOOK_HEADER: [&str; 4] = ["Parent", "Child", "Child_description", "Key words"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeLevel {
    Child,
    Parent,
}

impl fmt::Display for CodeLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CodeLevel::Child => "child",
            CodeLevel::Parent => "parent",
        })
    }
}

/// Reference to a code at a definite level. Serialized as
/// `{"level": "child"|"parent", "label": "..."}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "level", content = "label", rename_all = "lowercase")]
pub enum CodeRef {
    Child(String),
    Parent(String),
}

impl CodeRef {
    pub fn label(&self) -> &str {
        match self {
            CodeRef::Child(l) | CodeRef::Parent(l) => l,
        }
    }

    pub fn level(&self) -> CodeLevel {
        match self {
            CodeRef::Child(_) => CodeLevel::Child,
            CodeRef::Parent(_) => CodeLevel::Parent,
        }
    }

    pub fn is_parent(&self) -> bool {
        matches!(self, CodeRef::Parent(_))
    }
}

impl fmt::Display for CodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChildCode {
    pub label: String,
    pub parent_label: String,
    pub description: String,
    pub keywords: Vec<String>,
}

/// Validated codebook. Parent order is first-appearance order; children keep
/// file order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "CodebookParts", into = "CodebookParts")]
pub struct Codebook {
    parents: Vec<String>,
    children: Vec<ChildCode>,
    child_index: HashMap<String, usize>,
    parent_index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct CodebookParts {
    parents: Vec<String>,
    children: Vec<ChildCode>,
}

impl TryFrom<CodebookParts> for Codebook {
    type Error = CodebookError;

    fn try_from(p: CodebookParts) -> Result<Self> {
        Codebook::new(p.parents, p.children)
    }
}

impl From<Codebook> for CodebookParts {
    fn from(cb: Codebook) -> Self {
        CodebookParts {
            parents: cb.parents,
            children: cb.children,
        }
    }
}

impl PartialEq for Codebook {
    fn eq(&self, other: &Self) -> bool {
        self.parents == other.parents && self.children == other.children
    }
}

impl Codebook {
    pub fn new(parents: Vec<String>, children: Vec<ChildCode>) -> Result<Codebook> {
        let mut parent_index = HashMap::new();
        for (i, p) in parents.iter().enumerate() {
            parent_index.entry(normalize_label(p)).or_insert(i);
        }
        let mut child_index = HashMap::new();
        for (i, c) in children.iter().enumerate() {
            if c.parent_label.trim().is_empty() {
                return Err(CodebookError::OrphanChild(c.label.clone()));
            }
            if !parent_index.contains_key(&normalize_label(&c.parent_label)) {
                return Err(CodebookError::UnknownParent {
                    child: c.label.clone(),
                    parent: c.parent_label.clone(),
                });
            }
            if c.keywords.iter().any(|k| k.trim().is_empty()) {
                return Err(CodebookError::EmptyKeyword(c.label.clone()));
            }
            if child_index.insert(normalize_label(&c.label), i).is_some() {
                return Err(CodebookError::DuplicateChildLabel(c.label.clone()));
            }
        }
        Ok(Codebook {
            parents,
            children,
            child_index,
            parent_index,
        })
    }

    pub fn parents(&self) -> &[String] {
        &self.parents
    }

    pub fn children(&self) -> &[ChildCode] {
        &self.children
    }

    pub fn children_of<'a>(&'a self, parent: &'a str) -> impl Iterator<Item = &'a ChildCode> + 'a {
        let key = normalize_label(parent);
        self.children
            .iter()
            .filter(move |c| normalize_label(&c.parent_label) == key)
    }

    pub fn child(&self, label: &str) -> Option<&ChildCode> {
        self.child_index
            .get(&normalize_label(label))
            .map(|&i| &self.children[i])
    }

    /// Canonical parent label for a (possibly differently cased) input.
    pub fn parent(&self, label: &str) -> Option<&str> {
        self.parent_index
            .get(&normalize_label(label))
            .map(|&i| self.parents[i].as_str())
    }

    pub fn child_position(&self, label: &str) -> Option<usize> {
        self.child_index.get(&normalize_label(label)).copied()
    }

    pub fn parent_position(&self, label: &str) -> Option<usize> {
        self.parent_index.get(&normalize_label(label)).copied()
    }

    /// Resolve a free-text label: child labels first, then parent labels.
    /// Matching is exact after normalization.
    pub fn resolve(&self, label: &str) -> Option<CodeRef> {
        self.resolve_child(label).or_else(|| self.resolve_parent(label))
    }

    pub fn resolve_child(&self, label: &str) -> Option<CodeRef> {
        self.child(label).map(|c| CodeRef::Child(c.label.clone()))
    }

    pub fn resolve_parent(&self, label: &str) -> Option<CodeRef> {
        self.parent(label).map(|p| CodeRef::Parent(p.to_string()))
    }

    /// Check that a reference names an existing code at its level and
    /// return the canonical spelling.
    pub fn canonicalize(&self, code: &CodeRef) -> Result<CodeRef> {
        match code {
            CodeRef::Child(l) => self.resolve_child(l),
            CodeRef::Parent(l) => self.resolve_parent(l),
        }
        .ok_or_else(|| CodebookError::UnknownLabel {
            level: code.level(),
            label: code.label().to_string(),
        })
    }

    pub fn contains(&self, code: &CodeRef) -> bool {
        self.canonicalize(code).is_ok()
    }

    /// Parent label of a reference: a child's parent, or the parent itself.
    pub fn parent_of(&self, code: &CodeRef) -> Result<&str> {
        let unknown = || CodebookError::UnknownLabel {
            level: code.level(),
            label: code.label().to_string(),
        };
        match code {
            CodeRef::Child(l) => {
                let child = self.child(l).ok_or_else(unknown)?;
                self.parent(&child.parent_label).ok_or_else(unknown)
            }
            CodeRef::Parent(l) => self.parent(l).ok_or_else(unknown),
        }
    }

    /// Render the codebook as CSV for substitution into a prompt. Children
    /// keep their order; childless parents are emitted as rows with empty
    /// child cells at their position in the parent order.
    pub fn to_prompt_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .quote_style(csv::QuoteStyle::Necessary)
            .from_writer(Vec::new());
        // Writes to a Vec cannot fail.
        w.write_record(CODEBOOK_HEADER).expect("in-memory write");
        let mut emitted = vec![false; self.parents.len()];
        let mut has_children = vec![false; self.parents.len()];
        for c in &self.children {
            if let Some(i) = self.parent_position(&c.parent_label) {
                has_children[i] = true;
            }
        }
        let flush_childless = |upto: usize, w: &mut csv::Writer<Vec<u8>>, emitted: &mut Vec<bool>| {
            for i in 0..upto {
                if !emitted[i] && !has_children[i] {
                    w.write_record([self.parents[i].as_str(), "", "", ""])
                        .expect("in-memory write");
                    emitted[i] = true;
                }
            }
        };
        for c in &self.children {
            let pi = self.parent_position(&c.parent_label).unwrap_or(0);
            if !emitted[pi] {
                flush_childless(pi, &mut w, &mut emitted);
                emitted[pi] = true;
            }
            let kw = c.keywords.join(";");
            w.write_record([
                self.parents[pi].as_str(),
                c.label.as_str(),
                c.description.as_str(),
                kw.as_str(),
            ])
            .expect("in-memory write");
        }
        flush_childless(self.parents.len(), &mut w, &mut emitted);
        let bytes = w.into_inner().expect("in-memory flush");
        String::from_utf8(bytes).expect("csv output is utf-8")
    }

    pub fn from_csv_str(text: &str) -> Result<Codebook> {
        parse_csv(csv::ReaderBuilder::new().from_reader(text.as_bytes()))
    }
}

/// Load and validate a codebook CSV (`Parent,Child,Child_description,Key words`,
/// keywords `;`-separated within their cell).
pub fn load_codebook(path: impl AsRef<Path>) -> Result<Codebook> {
    let reader = csv::ReaderBuilder::new()
        .from_path(path.as_ref())
        .map_err(csv_err)?;
    parse_csv(reader)
}

/// Free-function form of [`Codebook::to_prompt_csv`].
pub fn codebook_to_prompt_csv(cb: &Codebook) -> String {
    cb.to_prompt_csv()
}

fn parse_csv<R: std::io::Read>(mut reader: csv::Reader<R>) -> Result<Codebook> {
    let headers = reader.headers().map_err(csv_err)?.clone();
    let mut idx = [0usize; 4];
    for (slot, name) in idx.iter_mut().zip(CODEBOOK_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CodebookError::MissingColumn(name.to_string()))?;
    }
    let mut parents: Vec<String> = Vec::new();
    let mut children = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let get = |i: usize| record.get(i).unwrap_or("").trim().to_string();
        let parent = get(idx[0]);
        let child = get(idx[1]);
        if parent.is_empty() {
            if child.is_empty() {
                continue;
            }
            return Err(CodebookError::OrphanChild(child));
        }
        if !parents
            .iter()
            .any(|p| normalize_label(p) == normalize_label(&parent))
        {
            parents.push(parent.clone());
        }
        if child.is_empty() {
            continue;
        }
        let keywords = record
            .get(idx[3])
            .unwrap_or("")
            .split(';')
            .map(str::trim)
            .filter(|k| !k.is_empty())
            .map(str::to_string)
            .collect();
        children.push(ChildCode {
            label: child,
            parent_label: parent,
            description: get(idx[2]),
            keywords,
        });
    }
    Codebook::new(parents, children)
}

fn csv_err(e: csv::Error) -> CodebookError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CodebookError::Io(io),
        kind => CodebookError::ParseError {
            line,
            message: format!("{kind:?}"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Codebook {
        Codebook::from_csv_str(
            "Parent,Child,Child_description,Key words\n\
             School finance,Funding formula,\"Revisions to the formula, allocation rules\",formula;allocation\n\
             School finance,Targeted funds,Categorical grants,grant\n\
             \"Culture, climate and environment\",Anti-racism,Equity work,racism\n\
             Staffing resources,,,\n",
        )
        .unwrap()
    }

    #[test]
    fn single_row_codebook() {
        let cb = Codebook::from_csv_str(
            "Parent,Child,Child_description,Key words\n\
             School finance,Funding formula,…,formula;allocation\n",
        )
        .unwrap();
        assert_eq!(cb.parents().len(), 1);
        assert_eq!(cb.children().len(), 1);
        assert_eq!(cb.children()[0].keywords, vec!["formula", "allocation"]);
    }

    #[test]
    fn duplicate_child_rejected() {
        let err = Codebook::from_csv_str(
            "Parent,Child,Child_description,Key words\nA,x,,\nB,x,,\n",
        )
        .unwrap_err();
        assert!(matches!(err, CodebookError::DuplicateChildLabel(l) if l == "x"));
    }

    #[test]
    fn blank_parent_is_orphan() {
        let err =
            Codebook::from_csv_str("Parent,Child,Child_description,Key words\n,x,,\n").unwrap_err();
        assert!(matches!(err, CodebookError::OrphanChild(_)));
    }

    #[test]
    fn missing_column() {
        let err = Codebook::from_csv_str("Parent,Child,Keywords\nA,b,c\n").unwrap_err();
        assert!(matches!(err, CodebookError::MissingColumn(c) if c == "Child_description"));
    }

    #[test]
    fn parent_of_child_and_parent() {
        let cb = small();
        assert_eq!(
            cb.parent_of(&CodeRef::Child("Funding formula".into())).unwrap(),
            "School finance"
        );
        assert_eq!(
            cb.parent_of(&CodeRef::Parent("School finance".into())).unwrap(),
            "School finance"
        );
        assert_eq!(
            cb.parent_of(&CodeRef::Child("Anti-racism".into())).unwrap(),
            "Culture, climate and environment"
        );
        assert!(matches!(
            cb.parent_of(&CodeRef::Child("Nope".into())),
            Err(CodebookError::UnknownLabel { .. })
        ));
    }

    #[test]
    fn childless_parent_is_kept() {
        let cb = small();
        assert_eq!(cb.parents().len(), 3);
        assert_eq!(cb.children_of("Staffing resources").count(), 0);
    }

    #[test]
    fn prompt_csv_round_trip_and_quoting() {
        let cb = small();
        let text = cb.to_prompt_csv();
        assert!(text.starts_with("Parent,Child,Child_description,Key words\n"));
        assert!(text.contains("\"Revisions to the formula, allocation rules\""));
        let back = Codebook::from_csv_str(&text).unwrap();
        assert_eq!(back, cb);
        assert_eq!(back.to_prompt_csv(), text);
    }

    #[test]
    fn one_child_prompt_csv_has_two_lines() {
        let cb = Codebook::from_csv_str(
            "Parent,Child,Child_description,Key words\nA,b,desc,k\n",
        )
        .unwrap();
        assert_eq!(cb.to_prompt_csv().lines().count(), 2);
    }

    #[test]
    fn resolve_prefers_child_and_normalizes() {
        let cb = small();
        assert_eq!(
            cb.resolve("  funding   FORMULA "),
            Some(CodeRef::Child("Funding formula".into()))
        );
        assert_eq!(
            cb.resolve("school finance"),
            Some(CodeRef::Parent("School finance".into()))
        );
        assert_eq!(cb.resolve("funding formulas"), None);
    }

    #[test]
    fn code_ref_json_shape() {
        let j = serde_json::to_string(&CodeRef::Parent("A".into())).unwrap();
        assert_eq!(j, r#"{"level":"parent","label":"A"}"#);
    }
}
