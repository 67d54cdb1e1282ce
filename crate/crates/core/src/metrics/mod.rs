//! Evaluation probes: ROUGE, repetition, positional bias and length profiles.

mod diagnostics;
pub mod rouge;

pub use diagnostics::{
    aggregate_rouge, diagnose, document_rouge, length_profile, mean_repetition, position_bucket,
    positional_bias, repetition_score, DiagnosticsReport, PositionalBias,
};
pub use rouge::{
    rouge_1_2, rouge_scores, unigram_precision, LcsMode, Prf, RougeOptions, RougeScore,
};
