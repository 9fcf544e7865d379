pub mod annotation;
pub mod codebook;
pub mod corpus;
pub mod llm;
pub mod text;
pub mod harmonize;
pub mod lexicon;
pub mod metrics;
pub mod lda;
pub mod report;
pub mod pipeline;
pub mod service;
pub mod synthetic;
