//! Machine-vs-human agreement statistics.

pub mod binary;
pub mod bootstrap;
pub mod eval;
pub mod sentiment;
pub mod sets;
pub mod tfidf;

use thiserror::Error;

pub use binary::{accuracy, auc_binary, cohen_kappa, macro_prf, micro_prf, Prf};
pub use bootstrap::{bootstrap, codewise_metrics, percentile, pooled_matrix_metrics, CodewiseMetric, MetricValue, PooledMetrics};
pub use eval::{evaluate_sentiment, evaluate_thematic, EvalOptions, EvalReport, EvalSummary, SentimentReport};
pub use sentiment::{agreement_by_theme, sentiment_confusion, ConfusionMatrix3, SentimentAgreement, ThemeAgreement};
pub use sets::{hit_rate, overlap_coefficients, shuffled_hit_rate, Overlap};
pub use tfidf::{tfidf_cosine_by_code, CodeCosine};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("no paragraph is eligible for this metric")]
    NoEligibleParagraphs,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("truth vector contains a single class")]
    SingleClassTruth,
    #[error("no annotation for paragraph `{0}`")]
    MissingAnnotation(String),
    #[error("at least {0} rows are required")]
    TooFewRows(usize),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, MetricsError>;
