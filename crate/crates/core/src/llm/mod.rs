//! LLM-based thematic and sentiment annotation.

pub mod annotate;
pub mod mock;
pub mod parse;
pub mod prompt;
pub mod provider;

pub use annotate::{annotate_corpus, reproducibility_check, AnnotateError, AnnotatorConfig};
pub use mock::KeywordMockProvider;
pub use parse::{parse_sentiment_response, parse_thematic_response, ParseError};
pub use prompt::{
    build_sentiment_prompt, build_sentiment_prompt_text, build_thematic_prompt, build_thematic_prompt_text, PromptStyle,
};
pub use provider::{CompletionRequest, CompletionResponse, HttpProvider, Provider, ProviderError};
