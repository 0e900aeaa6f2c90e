//! The toy diffusion-transformer video editor.
//!
//! A frozen surrogate VAE (space-time average pooling) encodes every
//! modality; separate zero-init patch embeddings feed source, mask, and
//! reference streams; conditioning is sequence concatenation or
//! embed-addition; tuning is full or LoRA on the attention projections.

mod config;
mod gradfix;
mod dit;
mod lora;
mod params;
mod surrogate;
mod tokens;

pub use config::{Conditioning, MaskInjection, ModelConfig, Tuning};
pub use gradfix::check_model_gradients_fixture;
pub use dit::{
    assemble_tokens, cond_vector, model_forward, EditorInputs, InstructionEncoder, NULL_TOKEN,
};
pub use lora::{adapter_param_count, lora_attach, lora_merge};
pub use params::{stage_params, ModelParams, TapeParams};
pub use surrogate::{
    encode_mask_for_injection, surrogate_decode, surrogate_encode, LatentGrid,
};
pub use tokens::{patchify, unpatchify, StreamCounts, StreamTag, TokenSequence};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("missing parameter {0}")]
    MissingParam(String),

    #[error("lora: {0}")]
    Lora(String),

    #[error(transparent)]
    Tensor(#[from] v2vforge_tensor::TensorError),

    #[error(transparent)]
    Media(#[from] v2vforge_media::MediaError),

    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, ModelError>;
