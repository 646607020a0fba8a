//! Small autoregressive transformers over the token streams: a
//! decoder-only primitive model, an encoder–decoder constraint model with
//! pointer outputs, and an image-conditioned primitive model.

mod checkpoint;
mod data;
mod grammar;
mod model;
mod params;
mod sample;
pub mod tape;
mod tensor;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::handdraw::HanddrawError;
use crate::tokenizer::TokenError;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use data::{Example, Stream, TrainItem};
pub use model::{embed, pointer_logits, NextTokenModel, SequenceModel, StepLogits, UniformModel, POINTER_OFFSET};
pub use params::{AdamW, OneCycle, ParamSet};
pub use sample::{autoconstrain, generate, nucleus_sample, softmax, Context, Generated, SamplerConfig};
pub use tensor::Tensor;
pub use train::{loss_csv, train, LossPoint, TrainConfig, TrainOutcome};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("token {what} = {value} outside vocabulary of size {size}")]
    OutOfVocab { what: &'static str, value: u32, size: usize },
    #[error("sequence of length {len} exceeds max_seq_len {max}")]
    SeqTooLong { len: usize, max: usize },
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("context does not match a {0:?} model")]
    ContextMismatch(ModelKind),
    #[error("non-finite loss at step {step} (epoch {epoch}, lr {lr:e})")]
    NonFiniteLoss { step: usize, epoch: usize, lr: f64 },
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("empty training corpus")]
    EmptyCorpus,
    #[error(transparent)]
    Token(#[from] TokenError),
    #[error(transparent)]
    Handdraw(#[from] HanddrawError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Primitive,
    Constraint,
    ImageConditional,
}

impl ModelKind {
    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "primitive" => Some(Self::Primitive),
            "constraint" => Some(Self::Constraint),
            "image_conditional" | "image" => Some(Self::ImageConditional),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub layers: usize,
    pub heads: usize,
    pub embed_dim: usize,
    pub mlp_ratio: usize,
    pub max_seq_len: usize,
    pub max_primitives: usize,
    pub max_constraints: usize,
    pub primitive_vocab: usize,
    pub primitive_id_vocab: usize,
    pub constraint_value_vocab: usize,
    pub constraint_id_vocab: usize,
    pub init_seed: u64,
}

impl ModelConfig {
    /// 2 layers, 2 heads, 64-dimensional embeddings.
    pub fn desk(kind: ModelKind) -> Self {
        use crate::tokenizer::vocab;
        Self {
            kind,
            layers: 2,
            heads: 2,
            embed_dim: 64,
            mlp_ratio: 4,
            max_seq_len: 256,
            max_primitives: crate::tokenizer::DEFAULT_MAX_PRIMITIVES,
            max_constraints: 64,
            primitive_vocab: vocab::PRIMITIVE_VOCAB as usize,
            primitive_id_vocab: vocab::PRIMITIVE_ID_VOCAB as usize,
            constraint_value_vocab: vocab::REFERENCE_BASE as usize,
            constraint_id_vocab: vocab::CONSTRAINT_ID_VOCAB as usize,
            init_seed: 0,
        }
    }

    /// 12 layers, 8 heads, 256-dimensional embeddings.
    pub fn reference(kind: ModelKind) -> Self {
        Self { layers: 12, heads: 8, embed_dim: 256, ..Self::desk(kind) }
    }

    /// Smallest useful configuration, for gradient checks.
    pub fn tiny(kind: ModelKind) -> Self {
        Self { layers: 1, heads: 2, embed_dim: 8, mlp_ratio: 2, ..Self::desk(kind) }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.heads == 0 || self.embed_dim == 0 || self.embed_dim % self.heads != 0 {
            return Err(ModelError::Config(format!(
                "embed_dim {} must be a positive multiple of heads {}",
                self.embed_dim, self.heads
            )));
        }
        if self.layers == 0 || self.mlp_ratio == 0 || self.max_seq_len < 2 {
            return Err(ModelError::Config("layers, mlp_ratio must be positive and max_seq_len ≥ 2".into()));
        }
        Ok(())
    }
}
