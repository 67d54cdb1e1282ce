//! Model assembly, supervised and policy-gradient training, checkpoints and evaluation.

mod checkpoint;
mod model;
mod train;

pub use checkpoint::{Checkpoint, Provenance, CHECKPOINT_MAGIC};
pub use model::{EmbeddingKind, Model, ModelConfig, PreparedDoc};
pub use train::{
    evaluate, fine_tune, policy_loss, reinforce_gradients, sentence_reward, train_reinforce,
    train_supervised, EpochRecord, Evaluation, PolicySample, Schema, StopReason, TrainConfig,
    TrainInputs, TrainOutcome,
};
