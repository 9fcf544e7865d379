//! Parsing of structured model responses into labels.

use serde_json::{Map, Value};
use thiserror::Error;

use crate::annotation::{SentimentLabel, MAX_LABELS};
use crate::codebook::{CodeRef, Codebook};
use crate::text::is_empty_slot;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("no JSON object found in response")]
    NoJsonFound,
    #[error("response object has no theme keys")]
    NoLabelKeys,
    #[error("no label in the response matched the codebook: {0:?}")]
    AllLabelsUnmatched(Vec<String>),
    #[error("response object has no `Sentiment` key")]
    MissingSentiment,
    #[error("unknown sentiment `{0}`")]
    UnknownSentiment(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedThemes {
    /// At most three distinct labels, in slot order.
    pub labels: Vec<CodeRef>,
    pub reasoning: String,
    /// Raw label strings that did not match the codebook.
    pub unmatched: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSentiment {
    pub label: SentimentLabel,
    pub reasoning: String,
}

/// Find the first parseable JSON object in free text (prose, code fences).
pub fn extract_json_object(raw: &str) -> Option<Map<String, Value>> {
    for (i, _) in raw.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&raw[i..]).into_iter::<Value>();
        if let Some(Ok(Value::Object(map))) = stream.next() {
            return Some(map);
        }
    }
    None
}

/// `"Parent 1"`, `"parent_1"`, `"Parent1"` all become `parent1`.
fn key_norm(key: &str) -> String {
    key.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

fn slot_value(v: &Value) -> Option<String> {
    match v {
        Value::Null => None,
        Value::String(s) if is_empty_slot(s) => None,
        Value::String(s) => Some(s.clone()),
        Value::Array(items) => items.iter().find_map(slot_value),
        other => Some(other.to_string()),
    }
}

/// Parse a thematic response. Accepts both `Parent i`/`Child i` pairs and
/// `Theme i` strings. Child labels are tried before parent labels for theme
/// strings; an empty or `"None"` child with a present parent yields a parent
/// reference. Unmatched labels are dropped and reported.
pub fn parse_thematic_response(raw: &str, cb: &Codebook) -> Result<ParsedThemes, ParseError> {
    let obj = extract_json_object(raw).ok_or(ParseError::NoJsonFound)?;
    let fields: Vec<(String, &Value)> = obj.iter().map(|(k, v)| (key_norm(k), v)).collect();
    let get = |name: &str| {
        fields
            .iter()
            .find(|(k, _)| k == name)
            .and_then(|(_, v)| slot_value(v))
    };
    let has_key = |name: &str| fields.iter().any(|(k, _)| k == name);

    let mut labels: Vec<CodeRef> = Vec::new();
    let mut unmatched = Vec::new();
    let mut offered = 0usize;
    let mut any_slot_key = false;

    for i in 1..=MAX_LABELS {
        let (pk, ck, tk) = (format!("parent{i}"), format!("child{i}"), format!("theme{i}"));
        let slot = if has_key(&pk) || has_key(&ck) {
            any_slot_key = true;
            let child = get(&ck);
            let parent = get(&pk);
            offered += usize::from(child.is_some() || parent.is_some());
            let mut found = None;
            if let Some(c) = &child {
                found = cb.resolve_child(c);
                if found.is_none() {
                    unmatched.push(c.clone());
                }
            }
            if found.is_none() {
                if let Some(p) = &parent {
                    found = cb.resolve_parent(p);
                    if found.is_none() {
                        unmatched.push(p.clone());
                    }
                }
            }
            found
        } else if has_key(&tk) {
            any_slot_key = true;
            match get(&tk) {
                Some(t) => {
                    offered += 1;
                    let found = cb.resolve(&t);
                    if found.is_none() {
                        unmatched.push(t);
                    }
                    found
                }
                None => None,
            }
        } else {
            None
        };
        if let Some(code) = slot {
            if !labels.contains(&code) {
                labels.push(code);
            }
        }
    }

    if !any_slot_key {
        return Err(ParseError::NoLabelKeys);
    }
    if offered > 0 && labels.is_empty() {
        return Err(ParseError::AllLabelsUnmatched(unmatched));
    }
    for u in &unmatched {
        tracing::warn!("dropping label not in codebook: `{u}`");
    }
    labels.truncate(MAX_LABELS);
    let reasoning = get("reasoning").unwrap_or_default();
    Ok(ParsedThemes {
        labels,
        reasoning,
        unmatched,
    })
}

pub fn parse_sentiment_response(raw: &str) -> Result<ParsedSentiment, ParseError> {
    let obj = extract_json_object(raw).ok_or(ParseError::NoJsonFound)?;
    let mut sentiment = None;
    let mut reasoning = String::new();
    for (k, v) in &obj {
        match key_norm(k).as_str() {
            "sentiment" => sentiment = Some(v),
            "reasoning" => reasoning = v.as_str().map(str::to_string).unwrap_or_default(),
            _ => {}
        }
    }
    let value = sentiment.ok_or(ParseError::MissingSentiment)?;
    let text = match value {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    let label = text
        .parse::<SentimentLabel>()
        .map_err(|_| ParseError::UnknownSentiment(text.clone()))?;
    Ok(ParsedSentiment { label, reasoning })
}
