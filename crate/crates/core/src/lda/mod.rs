//! Topic-model baseline: document-term matrices, collapsed Gibbs LDA,
//! model-selection diagnostics and human topic labeling.

pub mod diagnostics;
pub mod dtm;
pub mod gibbs;
pub mod labeling;

use thiserror::Error;

pub use diagnostics::{
    exclusivity, held_out_loglik, residual_dispersion, search_k, semantic_coherence, top_docs, top_words,
    write_diagnostics_csv, DiagnosticsRow, SearchOptions,
};
pub use dtm::{build_dtm, DocTermMatrix, DtmOptions};
pub use gibbs::{fit_lda, LdaConfig, TopicModel};
pub use labeling::{annotate_corpus_lda, assign_topics, export_worksheet, TopicLabel, TopicLabelMap};

#[derive(Debug, Error)]
pub enum LdaError {
    #[error("vocabulary is empty after preprocessing")]
    EmptyVocabulary,
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("topic index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("worksheet line {line}: {message}")]
    Worksheet { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
