use serde::{Deserialize, Serialize};

use crate::{ModelError, Result};

/// How source tokens reach the denoiser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conditioning {
    /// Source tokens prepended to the sequence (clean per-stream roles).
    SeqCat,
    /// Source tokens added elementwise into the noisy target tokens.
    EmbedAdd,
}

/// How the encoded mask reaches the token streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskInjection {
    /// Surrogate-VAE mask latent added into the source tokens (default).
    AddToSrc,
    /// Surrogate-VAE mask latent added into the noisy target tokens.
    AddToTgt,
    /// Single-channel average-pooled mask added into the source tokens,
    /// bypassing the shared encoder route.
    DownsampleAddToSrc,
    /// Mask tokens appended as their own stream.
    SeqCatMask,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Tuning {
    Full,
    Lora { rank: usize, alpha: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub conditioning: Conditioning,
    pub mask_injection: MaskInjection,
    pub tuning: Tuning,
    /// Model width d.
    pub model_dim: usize,
    /// Transformer block count L.
    pub depth: usize,
    pub heads: usize,
    /// MLP hidden width as a multiple of d.
    pub mlp_ratio: usize,
    /// Token patch over the latent grid (pt, ph, pw).
    pub patch: (usize, usize, usize),
    /// Surrogate-VAE compression (ft, fh, fw).
    pub vae_factors: (usize, usize, usize),
    /// Closed instruction vocabulary; index 0 is reserved for the null
    /// (unconditional) token.
    pub vocab: Vec<String>,
}

impl ModelConfig {
    /// Desk-scale defaults: CPU-trainable in minutes while preserving every
    /// conditioning, tuning, and guidance mechanism.
    pub fn desk_default(vocab: Vec<String>) -> Self {
        ModelConfig {
            conditioning: Conditioning::SeqCat,
            mask_injection: MaskInjection::AddToSrc,
            tuning: Tuning::Lora { rank: 8, alpha: 16.0 },
            model_dim: 128,
            depth: 6,
            heads: 4,
            mlp_ratio: 2,
            patch: (1, 2, 2),
            vae_factors: (4, 4, 4),
            vocab,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.model_dim % self.heads != 0 {
            return Err(ModelError::InvalidConfig(format!(
                "model_dim {} not divisible by heads {}",
                self.model_dim, self.heads
            )));
        }
        if self.model_dim % 2 != 0 {
            return Err(ModelError::InvalidConfig(
                "model_dim must be even for sinusoidal codes".to_string(),
            ));
        }
        if let Tuning::Lora { rank, .. } = self.tuning {
            if rank < 1 {
                return Err(ModelError::InvalidConfig("lora rank must be >= 1".to_string()));
            }
        }
        if self.conditioning == Conditioning::EmbedAdd
            && self.mask_injection == MaskInjection::SeqCatMask
        {
            return Err(ModelError::InvalidConfig(
                "SeqCatMask cannot pair with EmbedAdd conditioning".to_string(),
            ));
        }
        if self.vocab.is_empty() {
            return Err(ModelError::InvalidConfig("vocabulary is empty".to_string()));
        }
        if self.depth == 0 {
            return Err(ModelError::InvalidConfig("depth must be >= 1".to_string()));
        }
        Ok(())
    }

    /// Patch input width for a latent with `channels` channels.
    pub fn patch_dim(&self, channels: usize) -> usize {
        let (pt, ph, pw) = self.patch;
        channels * pt * ph * pw
    }
}
