//! Tidy-text interview corpus: one paragraph per row with stakeholder
//! metadata.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("duplicate paragraph id `{0}`")]
    DuplicateId(String),
    #[error("paragraph `{0}` has empty text")]
    EmptyText(String),
    #[error("parse error at line {line}: {message}")]
    ParseError { line: u64, message: String },
    #[error("unknown corpus format `{0}` (expected csv or jsonl)")]
    UnknownFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CorpusError>;

/// Stakeholder job-role group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RoleGroup {
    AdministratorPolicymaker,
    Educator,
    NonProfitAdvocate,
    Other,
}

impl RoleGroup {
    pub const ALL: [RoleGroup; 4] = [
        RoleGroup::AdministratorPolicymaker,
        RoleGroup::Educator,
        RoleGroup::NonProfitAdvocate,
        RoleGroup::Other,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            RoleGroup::AdministratorPolicymaker => "AdministratorPolicymaker",
            RoleGroup::Educator => "Educator",
            RoleGroup::NonProfitAdvocate => "NonProfitAdvocate",
            RoleGroup::Other => "Other",
        }
    }

    /// Lenient parse accepting the canonical names plus common spellings
    /// ("Administrators/Policymakers", "Non-Profit and Advocates", ...).
    /// Returns `None` for anything unrecognized.
    pub fn parse_lenient(s: &str) -> Option<RoleGroup> {
        let key: String = s
            .chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect();
        match key.as_str() {
            "administratorpolicymaker" | "administratorspolicymakers" | "administrator"
            | "administrators" | "policymaker" | "policymakers" => {
                Some(RoleGroup::AdministratorPolicymaker)
            }
            "educator" | "educators" => Some(RoleGroup::Educator),
            "nonprofitadvocate" | "nonprofitadvocates" | "nonprofitandadvocates"
            | "nonprofitandadvocate" | "advocate" | "advocates" => {
                Some(RoleGroup::NonProfitAdvocate)
            }
            "other" => Some(RoleGroup::Other),
            _ => None,
        }
    }
}

impl fmt::Display for RoleGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RoleGroup {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        RoleGroup::parse_lenient(s).ok_or_else(|| format!("unknown role group `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paragraph {
    pub id: String,
    pub text: String,
    pub interviewee_id: String,
    pub role_group: RoleGroup,
    #[serde(default)]
    pub location: Option<String>,
    #[serde(default)]
    pub extra: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Csv,
    Jsonl,
}

impl FromStr for CorpusFormat {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(CorpusFormat::Csv),
            "jsonl" | "ndjson" => Ok(CorpusFormat::Jsonl),
            other => Err(CorpusError::UnknownFormat(other.to_string())),
        }
    }
}

impl CorpusFormat {
    /// Guess from the file extension; defaults to CSV.
    pub fn from_path(path: &Path) -> CorpusFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("jsonl") || e.eq_ignore_ascii_case("ndjson") => {
                CorpusFormat::Jsonl
            }
            _ => CorpusFormat::Csv,
        }
    }
}

/// Ordered, validated collection of paragraphs. Immutable after load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub paragraphs: Vec<Paragraph>,
    pub source_path: String,
}

const REQUIRED: [&str; 4] = ["id", "text", "interviewee_id", "role_group"];

/// Load a corpus, logging any warnings.
pub fn load_corpus(path: impl AsRef<Path>, format: CorpusFormat) -> Result<Corpus> {
    let (corpus, warnings) = load_corpus_with_warnings(path, format)?;
    for w in &warnings {
        tracing::warn!("{w}");
    }
    Ok(corpus)
}

/// Load a corpus and return the warnings instead of logging them.
pub fn load_corpus_with_warnings(
    path: impl AsRef<Path>,
    format: CorpusFormat,
) -> Result<(Corpus, Vec<String>)> {
    let path = path.as_ref();
    let mut warnings = Vec::new();
    let rows = match format {
        CorpusFormat::Csv => read_csv_rows(path)?,
        CorpusFormat::Jsonl => read_jsonl_rows(path)?,
    };
    let mut seen = HashSet::new();
    let mut paragraphs = Vec::with_capacity(rows.len());
    for raw in rows {
        if raw.text.trim().is_empty() {
            return Err(CorpusError::EmptyText(raw.id));
        }
        if !seen.insert(raw.id.clone()) {
            return Err(CorpusError::DuplicateId(raw.id));
        }
        let role_group = match RoleGroup::parse_lenient(&raw.role) {
            Some(r) => r,
            None => {
                warnings.push(format!(
                    "line {}: role group `{}` not recognized for paragraph `{}`, using Other",
                    raw.line, raw.role, raw.id
                ));
                RoleGroup::Other
            }
        };
        paragraphs.push(Paragraph {
            id: raw.id,
            text: raw.text,
            interviewee_id: raw.interviewee_id,
            role_group,
            location: raw.location.filter(|l| !l.is_empty()),
            extra: raw.extra,
        });
    }
    if paragraphs.is_empty() {
        warnings.push(format!("corpus `{}` contains no paragraphs", path.display()));
    }
    Ok((
        Corpus {
            paragraphs,
            source_path: path.display().to_string(),
        },
        warnings,
    ))
}

struct RawRow {
    line: u64,
    id: String,
    text: String,
    interviewee_id: String,
    role: String,
    location: Option<String>,
    extra: BTreeMap<String, String>,
}

fn read_csv_rows(path: &Path) -> Result<Vec<RawRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let mut idx = [0usize; 4];
    for (slot, name) in idx.iter_mut().zip(REQUIRED) {
        *slot = col(name).ok_or_else(|| CorpusError::MissingColumn(name.to_string()))?;
    }
    let loc_idx = col("location");
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let get = |i: usize| record.get(i).unwrap_or("").to_string();
        let mut extra = BTreeMap::new();
        for (i, h) in headers.iter().enumerate() {
            let h = h.trim();
            if REQUIRED.contains(&h) || h == "location" {
                continue;
            }
            let v = get(i);
            if !v.is_empty() {
                extra.insert(h.to_string(), v);
            }
        }
        rows.push(RawRow {
            line,
            id: get(idx[0]),
            text: get(idx[1]),
            interviewee_id: get(idx[2]),
            role: get(idx[3]),
            location: loc_idx.map(get),
            extra,
        });
    }
    Ok(rows)
}

fn read_jsonl_rows(path: &Path) -> Result<Vec<RawRow>> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line_no = n as u64 + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| CorpusError::ParseError {
                line: line_no,
                message: e.to_string(),
            })?;
        let obj = value.as_object().ok_or_else(|| CorpusError::ParseError {
            line: line_no,
            message: "expected a JSON object".into(),
        })?;
        let mut required = Vec::with_capacity(4);
        for name in REQUIRED {
            let v = obj
                .get(name)
                .ok_or_else(|| CorpusError::MissingColumn(name.to_string()))?;
            required.push(json_to_string(v));
        }
        let location = match obj.get("location") {
            None | Some(serde_json::Value::Null) => None,
            Some(v) => Some(json_to_string(v)),
        };
        let mut extra = BTreeMap::new();
        for (k, v) in obj {
            if REQUIRED.contains(&k.as_str()) || k == "location" {
                continue;
            }
            // Nested `extra` objects (as written by `write_jsonl`) are flattened.
            if k == "extra" {
                if let Some(map) = v.as_object() {
                    for (ek, ev) in map {
                        let s = json_to_string(ev);
                        if !s.is_empty() {
                            extra.insert(ek.clone(), s);
                        }
                    }
                    continue;
                }
            }
            let s = json_to_string(v);
            if !s.is_empty() {
                extra.insert(k.clone(), s);
            }
        }
        let mut it = required.into_iter();
        rows.push(RawRow {
            line: line_no,
            id: it.next().unwrap_or_default(),
            text: it.next().unwrap_or_default(),
            interviewee_id: it.next().unwrap_or_default(),
            role: it.next().unwrap_or_default(),
            location,
            extra,
        });
    }
    Ok(rows)
}

fn json_to_string(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn csv_err(e: csv::Error) -> CorpusError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CorpusError::Io(io),
        kind => CorpusError::ParseError {
            line,
            message: format!("{kind:?}"),
        },
    }
}

impl Corpus {
    pub fn new(paragraphs: Vec<Paragraph>) -> Result<Corpus> {
        let mut seen = HashSet::new();
        for p in &paragraphs {
            if p.text.trim().is_empty() {
                return Err(CorpusError::EmptyText(p.id.clone()));
            }
            if !seen.insert(p.id.as_str()) {
                return Err(CorpusError::DuplicateId(p.id.clone()));
            }
        }
        Ok(Corpus {
            paragraphs,
            source_path: String::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.paragraphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paragraphs.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Paragraph> {
        self.paragraphs.iter().find(|p| p.id == id)
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.paragraphs.iter().position(|p| p.id == id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.paragraphs.iter().map(|p| p.id.as_str())
    }

    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        let extra_keys: Vec<String> = self
            .paragraphs
            .iter()
            .flat_map(|p| p.extra.keys().cloned())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut out);
        let mut header = vec!["id", "text", "interviewee_id", "role_group", "location"];
        header.extend(extra_keys.iter().map(String::as_str));
        w.write_record(&header).map_err(csv_err)?;
        for p in &self.paragraphs {
            let mut row = vec![
                p.id.as_str(),
                p.text.as_str(),
                p.interviewee_id.as_str(),
                p.role_group.as_str(),
                p.location.as_deref().unwrap_or(""),
            ];
            row.extend(
                extra_keys
                    .iter()
                    .map(|k| p.extra.get(k).map(String::as_str).unwrap_or("")),
            );
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> Result<()> {
        for p in &self.paragraphs {
            let line = serde_json::to_string(p).map_err(|e| CorpusError::ParseError {
                line: 0,
                message: e.to_string(),
            })?;
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>, format: CorpusFormat) -> Result<PathBuf> {
        let path = path.as_ref();
        let file = std::io::BufWriter::new(File::create(path)?);
        match format {
            CorpusFormat::Csv => self.write_csv(file)?,
            CorpusFormat::Jsonl => self.write_jsonl(file)?,
        }
        Ok(path.to_path_buf())
    }
}

/// Partition paragraph ids by role group, preserving document order.
pub fn group_by_role(corpus: &Corpus) -> BTreeMap<RoleGroup, Vec<String>> {
    let mut groups: BTreeMap<RoleGroup, Vec<String>> = BTreeMap::new();
    for p in &corpus.paragraphs {
        groups.entry(p.role_group).or_default().push(p.id.clone());
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(contents: &str, ext: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(ext).tempfile().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    const THREE: &str = "id,text,interviewee_id,role_group,location,age\n\
        p1,We need more funding.,i1,Educator,Seattle,34\n\
        p2,Mentors helped me.,i2,Educator,,\n\
        p3,I started in the fall.,i3,Other,Tacoma,51\n";

    #[test]
    fn loads_three_rows_and_groups() {
        let f = write_tmp(THREE, ".csv");
        let c = load_corpus(f.path(), CorpusFormat::Csv).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.paragraphs[1].location, None);
        assert_eq!(c.paragraphs[0].extra.get("age").map(String::as_str), Some("34"));
        assert!(c.paragraphs[1].extra.is_empty());
        let g = group_by_role(&c);
        assert_eq!(g.len(), 2);
        assert_eq!(g[&RoleGroup::Educator], vec!["p1", "p2"]);
        assert_eq!(g[&RoleGroup::Other], vec!["p3"]);
    }

    #[test]
    fn empty_file_warns() {
        let f = write_tmp("id,text,interviewee_id,role_group,location\n", ".csv");
        let (c, warnings) = load_corpus_with_warnings(f.path(), CorpusFormat::Csv).unwrap();
        assert!(c.is_empty());
        assert_eq!(warnings.len(), 1);
        assert!(group_by_role(&c).is_empty());
    }

    #[test]
    fn whitespace_text_is_rejected() {
        let f = write_tmp(
            "id,text,interviewee_id,role_group\np1,\"   \",i1,Educator\n",
            ".csv",
        );
        let err = load_corpus(f.path(), CorpusFormat::Csv).unwrap_err();
        assert!(matches!(err, CorpusError::EmptyText(id) if id == "p1"));
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let f = write_tmp(
            "id,text,interviewee_id,role_group\np1,a,i1,Educator\np1,b,i1,Educator\n",
            ".csv",
        );
        assert!(matches!(
            load_corpus(f.path(), CorpusFormat::Csv),
            Err(CorpusError::DuplicateId(_))
        ));
    }

    #[test]
    fn missing_column_is_reported() {
        let f = write_tmp("id,text,role_group\np1,a,Educator\n", ".csv");
        assert!(matches!(
            load_corpus(f.path(), CorpusFormat::Csv),
            Err(CorpusError::MissingColumn(c)) if c == "interviewee_id"
        ));
    }

    #[test]
    fn unknown_role_maps_to_other_with_warning() {
        let f = write_tmp(
            "{\"id\":\"p1\",\"text\":\"hello\",\"interviewee_id\":\"i\",\"role_group\":\"Janitor\"}\n",
            ".jsonl",
        );
        let (c, w) = load_corpus_with_warnings(f.path(), CorpusFormat::Jsonl).unwrap();
        assert_eq!(c.paragraphs[0].role_group, RoleGroup::Other);
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn jsonl_parse_error_reports_line() {
        let f = write_tmp(
            "{\"id\":\"p1\",\"text\":\"a\",\"interviewee_id\":\"i\",\"role_group\":\"Other\"}\n{oops\n",
            ".jsonl",
        );
        assert!(matches!(
            load_corpus(f.path(), CorpusFormat::Jsonl),
            Err(CorpusError::ParseError { line: 2, .. })
        ));
    }

    #[test]
    fn lenient_role_spellings() {
        assert_eq!(
            RoleGroup::parse_lenient("Administrators/Policymakers"),
            Some(RoleGroup::AdministratorPolicymaker)
        );
        assert_eq!(
            RoleGroup::parse_lenient("Non-Profit and Advocates"),
            Some(RoleGroup::NonProfitAdvocate)
        );
        assert_eq!(RoleGroup::parse_lenient("educators"), Some(RoleGroup::Educator));
    }

    #[test]
    fn csv_and_jsonl_round_trip() {
        let f = write_tmp(THREE, ".csv");
        let c = load_corpus(f.path(), CorpusFormat::Csv).unwrap();
        for format in [CorpusFormat::Csv, CorpusFormat::Jsonl] {
            let mut buf = Vec::new();
            match format {
                CorpusFormat::Csv => c.write_csv(&mut buf).unwrap(),
                CorpusFormat::Jsonl => c.write_jsonl(&mut buf).unwrap(),
            }
            let g = write_tmp(std::str::from_utf8(&buf).unwrap(), ".tmp");
            let back = load_corpus(g.path(), format).unwrap();
            assert_eq!(back.paragraphs, c.paragraphs);
        }
    }
}
