//! Low-rank adapters on the attention projections.
//!
//! Per projection: `A` (r x d, small random), `B` (d x r, zero), effective
//! weight `W + (alpha/r) * B * A`. Zero `B` makes attachment a no-op, and
//! merging folds the delta into `W` with the same multiply-accumulate
//! order the tape uses, so merged and unmerged forwards agree.

use v2vforge_tensor::{SplitRng, Tensor};

use crate::{ModelError, ModelParams, Result, Tuning};

const PROJECTIONS: [&str; 4] = ["q", "k", "v", "o"];

/// Adapter parameter count: L blocks x 4 projections x (A + B) = L*4*2*r*d.
pub fn adapter_param_count(depth: usize, rank: usize, model_dim: usize) -> usize {
    depth * 4 * 2 * rank * model_dim
}

/// Attach fresh adapters to every attention projection and switch the
/// config to LoRA tuning (freezing the backbone).
pub fn lora_attach(params: &ModelParams, rank: usize, alpha: f64, seed: u64) -> Result<ModelParams> {
    if rank < 1 {
        return Err(ModelError::Lora("rank must be >= 1".to_string()));
    }
    if !params.lora_names().is_empty() {
        return Err(ModelError::Lora("adapters already attached".to_string()));
    }
    let mut out = params.clone();
    out.config.tuning = Tuning::Lora { rank, alpha };
    let d = out.config.model_dim;
    let rng = SplitRng::new(seed);
    for block in 0..out.config.depth {
        for proj in PROJECTIONS {
            let base = format!("blocks.{block}.attn.{proj}");
            let mut stream = rng.split_str(&base);
            out.insert(
                format!("{base}.lora_a"),
                Tensor::randn(&[rank, d], 0.02, &mut stream),
            );
            out.insert(format!("{base}.lora_b"), Tensor::zeros(&[d, rank]));
        }
    }
    Ok(out)
}

/// Fold every adapter into its base weight and remove the adapters.
pub fn lora_merge(params: &ModelParams) -> Result<ModelParams> {
    let Tuning::Lora { rank, alpha } = params.config.tuning else {
        return Err(ModelError::Lora("no adapter attached".to_string()));
    };
    if params.lora_names().is_empty() {
        return Err(ModelError::Lora("no adapter attached".to_string()));
    }
    let mut out = params.clone();
    let scale = (alpha / rank as f64) as f32;
    for block in 0..out.config.depth {
        for proj in PROJECTIONS {
            let base = format!("blocks.{block}.attn.{proj}");
            let a = out
                .remove(&format!("{base}.lora_a"))
                .ok_or_else(|| ModelError::Lora(format!("missing {base}.lora_a")))?;
            let b = out
                .remove(&format!("{base}.lora_b"))
                .ok_or_else(|| ModelError::Lora(format!("missing {base}.lora_b")))?;
            let (d, r) = b.dims2();
            let w = out.get_mut(&format!("{base}.w"))?;
            // Same expression the tape evaluates: W + scale * (B @ A),
            // with the matmul accumulating in the same k-order.
            for i in 0..d {
                for j in 0..d {
                    let mut acc = 0.0f32;
                    for p in 0..r {
                        acc += b.data()[i * r + p] * a.data()[p * d + j];
                    }
                    w.data_mut()[i * d + j] += scale * acc;
                }
            }
        }
    }
    out.config.tuning = Tuning::Full;
    Ok(out)
}
