//! Prompt templates and positional placeholder substitution.

use serde::{Deserialize, Serialize};

use crate::codebook::Codebook;
use crate::corpus::Paragraph;

/// Placeholder replaced by the codebook CSV in thematic templates.
pub const CODEBOOK_PLACEHOLDER: &str = "{codebook}";
/// Placeholder replaced by the paragraph text in thematic templates.
pub const THEMATIC_TEXT_PLACEHOLDER: &str = "[[[TEXTGOHERE]]]";
/// Placeholder replaced by the paragraph text in the sentiment template.
pub const SENTIMENT_TEXT_PLACEHOLDER: &str = "[TextGoHere]";

/// Step-by-step thematic coding prompt: parent themes first, then child
/// codes within each parent.
pub const COT_THEMATIC_TEMPLATE: &str = "\
Task: As a policy researcher, you’ve been provided with a paragraph extracted from an interview with an education policy stakeholder. Utilize the provided Codebook (in CSV format) to code the paragraph. The Codebook comprises four columns: ‘Parent’, ‘Child’, ‘Child_description’, and ‘Key words’.

Steps:

1. Identify Salient Themes:
- Understand the paragraph’s content within the context of the Washington State K-12 public school system.
- Refer to the ‘Parent’ column in the Codebook for broader thematic categories.
- Pinpoint up to three salient themes from these ‘Parent’ categories.
- These themes should highlight the most significant ideas in the paragraph.
- Label the paragraph with the chosen ‘Parent’ themes.

2. Dive into Child Themes:

- The ‘Child’ column in the Codebook lists detailed thematic subcategories, which fall under the broader ‘Parent’ categories.
- The ‘Child_description’ elaborates on the ‘Child’ categories, and the ‘Key words’ column lists pertinent terms for each ‘Child’ category.

3. Associate with Child Categories:

- Revisit the paragraph, keeping the Washington State K-12 public school system context in mind.
- For each previously identified ‘Parent’ theme, pinpoint the appropriate ‘Child’ subcategories from the Codebook. The ‘Child_description’ and ‘Key words’ columns can aid your decision.
- Ensure the ‘Child’ categories align with the paragraph’s content. If there’s no fit or you’re uncertain, label it as ‘None’.
- From your identified ‘Parent’ and ‘Child’ pairs, pick the top three pairs that encapsulate the paragraph’s central ideas.
- Label the paragraph with these three ‘Parent’ and corresponding ‘Child’ pairs.

Codebook:
{codebook}

Paragraph for Analysis:
[[[TEXTGOHERE]]]

Response Format:
Frame your answer as a JSON object containing the keys: ‘Parent 1’, ‘Child 1’, ‘Parent 2’, ‘Child 2’, ‘Parent 3’, ‘Child 3’, and ‘Reasoning’.
";

/// Single-instruction thematic prompt without step blocks.
pub const ZERO_SHOT_THEMATIC_TEMPLATE: &str = "\
Task: As a policy researcher, you’ve been provided with a paragraph extracted from an interview with an education policy stakeholder. Utilize the provided Codebook (in CSV format) to code the paragraph. The Codebook comprises four columns: ‘Parent’, ‘Child’, ‘Child_description’, and ‘Key words’.

Use the codebook to label three child and/or parent codes for the paragraph, considering the context of the Washington State K-12 public school system. If no child code works, only label the parent codes.

Codebook:
{codebook}

Paragraph for Analysis:
[[[TEXTGOHERE]]]

Response Format:
Frame your answer as a JSON object containing the keys: ‘Parent 1’, ‘Child 1’, ‘Parent 2’, ‘Child 2’, ‘Parent 3’, ‘Child 3’, and ‘Reasoning’.
";

/// Three-way sentiment classification prompt.
pub const SENTIMENT_TEMPLATE: &str = "\
Act as a policy researcher, you will classify the sentiment in the interviews of educational policy stakeholders as: “Positive”, “Negative”, or “Neutral”. Here is a statement from a policy stakeholder:

[TextGoHere]

To warrant “Positive” sentiment, the statement has to: (1) include the interviewee’s satisfaction about an educational policy (policies) and program(s), or (2) express an enhancement or potential to enhance the quality or equity of student learning or school system, or (3) identify an improvement from past practice. To warrant “Negative”, the statement describes the interviewees’ dissatisfactions, or identifies problems/issues/challenges, or suggests areas needed for further improvement. When the interviewee just states the fact without expressing either positive or negative sentiment, you can classify as “neutral”. When multiple sentiments are observed in one statement, identify the most prevailing sentiment. Explain your reasoning for your analysis.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptStyle {
    ZeroShotThematic,
    #[default]
    #[serde(rename = "cot_thematic")]
    CoTThematic,
    Sentiment,
}

impl PromptStyle {
    pub fn is_thematic(self) -> bool {
        !matches!(self, PromptStyle::Sentiment)
    }
}

impl std::str::FromStr for PromptStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "zeroshot" | "zeroshotthematic" => Ok(PromptStyle::ZeroShotThematic),
            "cot" | "cotthematic" | "chainofthought" => Ok(PromptStyle::CoTThematic),
            "sentiment" => Ok(PromptStyle::Sentiment),
            _ => Err(format!("unknown prompt style `{s}`")),
        }
    }
}

/// Replace each placeholder once, at its position in the template. Inserted
/// values are never scanned for further placeholders.
fn fill(template: &str, slots: &[(&str, &str)]) -> String {
    let mut positions: Vec<(usize, &str, &str)> = slots
        .iter()
        .map(|&(ph, value)| {
            let at = template
                .find(ph)
                .unwrap_or_else(|| panic!("template lacks placeholder {ph}"));
            (at, ph, value)
        })
        .collect();
    positions.sort_by_key(|p| p.0);
    let extra: usize = slots.iter().map(|s| s.1.len()).sum();
    let mut out = String::with_capacity(template.len() + extra);
    let mut cursor = 0;
    for (at, ph, value) in positions {
        out.push_str(&template[cursor..at]);
        out.push_str(value);
        cursor = at + ph.len();
    }
    out.push_str(&template[cursor..]);
    out
}

/// Build a thematic prompt. `style` must be a thematic style; the sentiment
/// style falls back to the step-by-step template.
pub fn build_thematic_prompt(cb: &Codebook, paragraph: &Paragraph, style: PromptStyle) -> String {
    build_thematic_prompt_text(&cb.to_prompt_csv(), &paragraph.text, style)
}

/// Same as [`build_thematic_prompt`] with a pre-rendered codebook CSV.
pub fn build_thematic_prompt_text(codebook_csv: &str, text: &str, style: PromptStyle) -> String {
    let template = match style {
        PromptStyle::ZeroShotThematic => ZERO_SHOT_THEMATIC_TEMPLATE,
        PromptStyle::CoTThematic | PromptStyle::Sentiment => COT_THEMATIC_TEMPLATE,
    };
    // The codebook CSV ends with a newline; the template supplies its own.
    let codebook_csv = codebook_csv.strip_suffix('\n').unwrap_or(codebook_csv);
    fill(
        template,
        &[
            (CODEBOOK_PLACEHOLDER, codebook_csv),
            (THEMATIC_TEXT_PLACEHOLDER, text),
        ],
    )
}

pub fn build_sentiment_prompt(paragraph: &Paragraph) -> String {
    build_sentiment_prompt_text(&paragraph.text)
}

pub fn build_sentiment_prompt_text(text: &str) -> String {
    fill(SENTIMENT_TEMPLATE, &[(SENTIMENT_TEXT_PLACEHOLDER, text)])
}

/// Recover the paragraph segment from a prompt built by this module.
pub fn extract_paragraph(prompt: &str) -> Option<&str> {
    if let Some(rest) = prompt.split_once("\nParagraph for Analysis:\n").map(|x| x.1) {
        return rest.rsplit_once("\n\nResponse Format:\n").map(|x| x.0);
    }
    let (head, _) = SENTIMENT_TEMPLATE.split_once(SENTIMENT_TEXT_PLACEHOLDER)?;
    let (_, tail) = SENTIMENT_TEMPLATE.split_once(SENTIMENT_TEXT_PLACEHOLDER)?;
    prompt.strip_prefix(head)?.strip_suffix(tail)
}

/// True when the prompt was built from the sentiment template.
pub fn is_sentiment_prompt(prompt: &str) -> bool {
    prompt.starts_with("Act as a policy researcher, you will classify the sentiment")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::RoleGroup;

    fn para(text: &str) -> Paragraph {
        Paragraph {
            id: "p".into(),
            text: text.into(),
            interviewee_id: "i".into(),
            role_group: RoleGroup::Other,
            location: None,
            extra: Default::default(),
        }
    }

    fn cb() -> Codebook {
        Codebook::from_csv_str(
            "Parent,Child,Child_description,Key words\nSchool finance,Funding formula,d,formula\n",
        )
        .unwrap()
    }

    #[test]
    fn cot_prompt_has_steps_and_text_once() {
        let p = build_thematic_prompt(&cb(), &para("We need more money."), PromptStyle::CoTThematic);
        assert!(p.contains("1. Identify Salient Themes:"));
        assert!(p.contains("2. Dive into Child Themes:"));
        assert!(p.contains("3. Associate with Child Categories:"));
        assert_eq!(p.matches("We need more money.").count(), 1);
        assert!(!p.contains(CODEBOOK_PLACEHOLDER));
        assert!(p.contains("School finance,Funding formula,d,formula\n\nParagraph for Analysis:"));
    }

    #[test]
    fn zero_shot_has_no_step_headings() {
        let p = build_thematic_prompt(&cb(), &para("x"), PromptStyle::ZeroShotThematic);
        assert!(!p.contains("Identify Salient Themes"));
        assert!(!p.contains("Steps:"));
    }

    #[test]
    fn placeholder_text_in_paragraph_is_not_substituted() {
        let text = "He said {codebook} and [[[TEXTGOHERE]]] out loud.";
        let p = build_thematic_prompt(&cb(), &para(text), PromptStyle::CoTThematic);
        assert_eq!(p.matches(text).count(), 1);
        assert_eq!(p.matches("Funding formula").count(), 1);
        let s = build_sentiment_prompt(&para("a [TextGoHere] b"));
        assert!(s.contains("a [TextGoHere] b"));
    }

    #[test]
    fn sentiment_prompt_contents() {
        let s = build_sentiment_prompt(&para("Budgets are tight."));
        for needle in [
            "“Positive”",
            "“Negative”",
            "“Neutral”",
            "identify the most prevailing sentiment",
            "To warrant “Positive” sentiment",
        ] {
            assert!(s.contains(needle), "{needle}");
        }
    }

    #[test]
    fn prompts_differ_only_in_substituted_segment() {
        let a = build_sentiment_prompt(&para("first"));
        let b = build_sentiment_prompt(&para("second text"));
        assert_eq!(a.replace("first", "second text"), b);
    }

    #[test]
    fn extract_paragraph_inverts_builders() {
        let text = "Line one.\n\nLine two with Response Format:\n inside.";
        let p = build_thematic_prompt(&cb(), &para(text), PromptStyle::CoTThematic);
        assert_eq!(extract_paragraph(&p), Some(text));
        let s = build_sentiment_prompt(&para(text));
        assert!(is_sentiment_prompt(&s));
        assert_eq!(extract_paragraph(&s), Some(text));
    }
}
