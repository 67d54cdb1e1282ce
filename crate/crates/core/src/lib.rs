//! Testbed for neural extractive summarization.
//!
//! The crate covers corpus handling and extractive ground truth, ROUGE and
//! behavioural diagnostics, word representations, sentence and document
//! encoders, sequence-labelling and pointer decoders, supervised and
//! policy-gradient training, and an experiment harness producing report tables.

pub mod autodiff;
pub mod corpus;
pub mod decoders;
pub mod embeddings;
pub mod encoders;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod nn;
pub mod training;

pub use error::{Error, Result};
