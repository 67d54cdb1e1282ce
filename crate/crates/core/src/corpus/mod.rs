//! Documents, corpora, extractive ground truth and baselines.

mod document;
mod io;
mod ops;
mod synth;

pub use document::{Corpus, Document, ExtractionResult, Sentence, Split};
pub use io::{
    corpus_hash, load_corpus, read_documents, read_extractions, save_corpus, write_documents,
    write_extractions,
};
pub use ops::{
    domain_stats, greedy_oracle_labels, greedy_oracle_trace, invert_permutation, label_corpus,
    lead_k, oracle_extraction, oracle_objective, permute_document, shuffle_permutation,
    shuffle_sentences, shuffle_split, DomainStats, DEFAULT_MAX_SELECT,
};
pub use synth::{synthetic_corpus, SynthSpec};
