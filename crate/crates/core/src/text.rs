//! Shared tokenization and label normalization.

use unicode_segmentation::UnicodeSegmentation;

/// Lowercased Unicode words (UAX #29 word boundaries, punctuation and
/// whitespace segments removed).
pub fn words(text: &str) -> Vec<String> {
    text.unicode_words().map(str::to_lowercase).collect()
}

/// Normalized form used for every label comparison: trimmed, casefolded,
/// internal whitespace collapsed to a single space.
pub fn normalize_label(label: &str) -> String {
    label
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// True for the placeholder values an LLM uses for an empty slot.
pub fn is_empty_slot(value: &str) -> bool {
    let v = normalize_label(value);
    v.is_empty() || v == "none" || v == "null" || v == "n/a" || v == "na"
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn words_strip_punctuation_and_lowercase() {
        assert_eq!(words("The Funding, formula!"), vec!["the", "funding", "formula"]);
        assert_eq!(words("isn't"), vec!["isn't"]);
        assert!(words("  ... ").is_empty());
    }

    #[test]
    fn normalize_collapses_whitespace() {
        assert_eq!(normalize_label("  School \t  Finance "), "school finance");
    }

    #[test]
    fn empty_slot_markers() {
        assert!(is_empty_slot("None"));
        assert!(is_empty_slot("  "));
        assert!(!is_empty_slot("Community"));
    }
}
