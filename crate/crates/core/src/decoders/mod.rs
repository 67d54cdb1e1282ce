//! Sequence-labelling and pointer decoders.

mod pointer;
mod seqlab;

pub use pointer::{decode_pointer, pointer_stepwise_logprobs, Choice, PointerDecoder, PointerStep};
pub use seqlab::{decode_seqlab, top_k_indices, SeqLabHead};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderKind {
    #[serde(rename = "seqlab", alias = "seq-lab")]
    SeqLab,
    Pointer,
    /// Parameter-free control that always returns the leading sentences.
    Lead,
}

impl DecoderKind {
    pub fn label(self) -> &'static str {
        match self {
            DecoderKind::SeqLab => "SeqLab",
            DecoderKind::Pointer => "Pointer",
            DecoderKind::Lead => "Lead",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecoderConfig {
    pub kind: DecoderKind,
    /// Hidden width of the sequence-labelling scorer.
    pub hidden: usize,
    /// Pointer decoder state width.
    pub state: usize,
    /// Glimpse / pointer attention width.
    pub attention: usize,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            kind: DecoderKind::Pointer,
            hidden: 256,
            state: 256,
            attention: 256,
        }
    }
}
