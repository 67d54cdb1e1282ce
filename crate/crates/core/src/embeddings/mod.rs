//! Word representations: seeded random tables, pretrained text tables and
//! precomputed contextual token stores.

mod contextual;
mod table;

pub use contextual::{
    expected_rows, project_contextual, sentence_span, ContextualProjection, ContextualStore,
    SentenceSpan, StoreMode, PROJECTED_WIDTH, PROJECTION_HIDDEN, STORE_MAGIC, TRUNCATION_LIMIT,
};
pub use table::{load_table, oov_vector, random_table, stable_hash, EmbeddingTable, Vocab};
