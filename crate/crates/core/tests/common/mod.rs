#![allow(dead_code)]

pub mod oracle;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sumprobe_core::corpus::Document;
use sumprobe_core::decoders::DecoderKind;
use sumprobe_core::embeddings::{expected_rows, ContextualStore, StoreMode};
use sumprobe_core::encoders::EncoderKind;
use sumprobe_core::training::{EmbeddingKind, ModelConfig};

pub fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

/// Small shapes: at most 16 wide everywhere a width is chosen.
pub fn tiny_config(encoder: EncoderKind, decoder: DecoderKind) -> ModelConfig {
    ModelConfig {
        word_dim: 6,
        sentence_dim: 9,
        encoder,
        layers: 1,
        width: 8,
        heads: 2,
        ff_mult: 2,
        decoder,
        decoder_hidden: 7,
        decoder_state: 6,
        attention: 5,
        ..ModelConfig::default()
    }
}

/// Widths used for the 64-document overfit runs.
pub fn toy_config(encoder: EncoderKind, decoder: DecoderKind) -> ModelConfig {
    ModelConfig {
        word_dim: 16,
        sentence_dim: 24,
        encoder,
        layers: 1,
        width: 16,
        heads: 4,
        ff_mult: 2,
        decoder,
        decoder_hidden: 16,
        decoder_state: 16,
        attention: 16,
        ..ModelConfig::default()
    }
}

pub fn contextual_config(layer_width: usize) -> ModelConfig {
    ModelConfig {
        embedding: EmbeddingKind::Contextual,
        embedding_path: Some("in-memory".into()),
        layer_width,
        projection_hidden: 8,
        ..tiny_config(EncoderKind::Recurrent, DecoderKind::Pointer)
    }
}

pub fn five_sentence_doc() -> Document {
    Document::new(
        "g",
        vec![
            words("the storm hit the coast"),
            words("officials said damage was light"),
            words("x"),
            words("schools will reopen on monday after the storm"),
            words("power returned to most homes"),
        ],
        vec![words("storm hit coast schools reopen monday")],
    )
    .with_labels(vec![1, 0, 0, 1, 0])
}

/// A store with seeded random features for `docs`.
pub fn random_store(docs: &[&Document], mode: StoreMode, dim: usize, seed: u64) -> ContextualStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ContextualStore::new(mode, dim);
    for d in docs {
        let rows = expected_rows(d, mode);
        let m = Array2::from_shape_fn((rows, dim), |_| rng.gen_range(-1.0f32..1.0));
        store.insert(d.id.clone(), m).unwrap();
    }
    store
}
