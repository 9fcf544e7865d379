//! Deterministic keyword-matching provider used in tests and offline runs.

use serde_json::json;

use crate::codebook::Codebook;
use crate::llm::prompt::{extract_paragraph, is_sentiment_prompt};
use crate::llm::provider::{CompletionRequest, CompletionResponse, Provider, ProviderError};
use crate::text::words;

const POSITIVE_WORDS: &[&str] = &[
    "benefit", "better", "effective", "enhance", "excellent", "good", "great", "helpful",
    "improve", "improved", "improvement", "positive", "progress", "strong", "success",
    "successful", "support", "supportive", "thrive", "works",
];

const NEGATIVE_WORDS: &[&str] = &[
    "bad", "barrier", "barriers", "challenge", "challenges", "concern", "concerns", "cut",
    "cuts", "difficult", "fail", "failed", "failing", "inadequate", "issue", "issues", "lack",
    "lacking", "poor", "problem", "problems", "shortage", "struggle", "struggling", "worse",
];

/// Scores each child code by whole-word keyword occurrences in the
/// paragraph and answers with the top three nonzero codes.
pub struct KeywordMockProvider {
    codebook: Codebook,
    keywords: Vec<Vec<Vec<String>>>,
}

impl KeywordMockProvider {
    pub fn new(cb: &Codebook) -> Self {
        let keywords = cb
            .children()
            .iter()
            .map(|c| {
                c.keywords
                    .iter()
                    .map(|k| words(k))
                    .filter(|k| !k.is_empty())
                    .collect()
            })
            .collect();
        KeywordMockProvider {
            codebook: cb.clone(),
            keywords,
        }
    }

    /// Child positions with nonzero scores, best first, ties in codebook order.
    pub fn score(&self, text: &str) -> Vec<(usize, usize)> {
        let tokens = words(text);
        let mut scored: Vec<(usize, usize)> = self
            .keywords
            .iter()
            .enumerate()
            .map(|(i, kws)| (i, kws.iter().map(|k| count_phrase(&tokens, k)).sum()))
            .filter(|&(_, s)| s > 0)
            .collect();
        scored.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        scored
    }

    fn thematic_response(&self, text: &str) -> String {
        let top = self.score(text);
        let mut obj = serde_json::Map::new();
        for slot in 0..3 {
            let (parent, child) = match top.get(slot) {
                Some(&(i, _)) => {
                    let c = &self.codebook.children()[i];
                    (c.parent_label.clone(), c.label.clone())
                }
                None => ("None".to_string(), "None".to_string()),
            };
            obj.insert(format!("Parent {}", slot + 1), json!(parent));
            obj.insert(format!("Child {}", slot + 1), json!(child));
        }
        obj.insert(
            "Reasoning".into(),
            json!(format!("{} codebook keyword match(es).", top.len())),
        );
        serde_json::Value::Object(obj).to_string()
    }

    fn sentiment_response(text: &str) -> String {
        let tokens = words(text);
        let pos = tokens.iter().filter(|t| POSITIVE_WORDS.contains(&t.as_str())).count();
        let neg = tokens.iter().filter(|t| NEGATIVE_WORDS.contains(&t.as_str())).count();
        let label = match pos.cmp(&neg) {
            std::cmp::Ordering::Greater => "Positive",
            std::cmp::Ordering::Less => "Negative",
            std::cmp::Ordering::Equal => "Neutral",
        };
        json!({
            "Sentiment": label,
            "Reasoning": format!("{pos} positive and {neg} negative cue words."),
        })
        .to_string()
    }
}

fn count_phrase(tokens: &[String], phrase: &[String]) -> usize {
    if phrase.is_empty() || tokens.len() < phrase.len() {
        return 0;
    }
    tokens.windows(phrase.len()).filter(|w| *w == phrase).count()
}

impl Provider for KeywordMockProvider {
    fn id(&self) -> &str {
        "mock"
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ProviderError> {
        let text = extract_paragraph(&request.prompt_text).unwrap_or(&request.prompt_text);
        let text = if is_sentiment_prompt(&request.prompt_text) {
            Self::sentiment_response(text)
        } else {
            self.thematic_response(text)
        };
        Ok(CompletionResponse { text })
    }
}
